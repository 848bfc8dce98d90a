// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "condscope/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "condscope/error.hpp"

namespace condscope {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kPreludeLen = 10;  // magic + 2 version bytes + u16 header length
constexpr std::size_t kAlign = 64;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void append_le(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T load_le(const char* src) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::string shape_literal(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  s += ")";
  return s;
}

// Minimal parser for the Python dict literal in an NPY v1.0 header.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  void parse(std::string& descr, bool& fortran, Shape& shape) {
    bool have_descr = false, have_fortran = false, have_shape = false;
    skip_ws();
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') break;
      const std::string key = quoted();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        descr = quoted();
        have_descr = true;
      } else if (key == "fortran_order") {
        fortran = boolean();
        have_fortran = true;
      } else if (key == "shape") {
        shape = tuple();
        have_shape = true;
      } else {
        fail("unexpected key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      skip_ws();
      if (peek() != '}') fail("expected ',' or '}'");
    }
    if (!have_descr || !have_fortran || !have_shape) fail("missing descr, fortran_order or shape");
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Errc::MalformedHeader, why + " at offset " + std::to_string(pos_));
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string quoted() {
    const char q = peek();
    if (q != '\'' && q != '"') fail("expected a quoted string");
    ++pos_;
    const std::size_t end = text_.find(q, pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }
  bool boolean() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }
  Shape tuple() {
    Shape shape;
    expect('(');
    while (true) {
      skip_ws();
      if (peek() == ')') break;
      std::size_t value = 0;
      const char* first = text_.data() + pos_;
      const auto [ptr, ec] = std::from_chars(first, text_.data() + text_.size(), value);
      if (ec != std::errc() || ptr == first) fail("expected a dimension");
      pos_ += static_cast<std::size_t>(ptr - first);
      shape.push_back(value);
      skip_ws();
      if (peek() == ',') ++pos_;
      else if (peek() != ')') fail("expected ',' or ')'");
    }
    ++pos_;
    return shape;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void check_finite(const nlohmann::json& j, const std::string& where) {
  if (j.is_number_float() && !std::isfinite(j.get<double>())) {
    throw Error(Errc::NonFiniteValue, "non-finite number at " + (where.empty() ? "/" : where));
  }
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) check_finite(v, where + "/" + k);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) check_finite(j[i], where + "/" + std::to_string(i));
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void emit(const nlohmann::json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
  const std::string close_pad(static_cast<std::size_t>(depth) * 2, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      // object_t is an ordered std::map, so iteration is already sorted.
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + nlohmann::json(k).dump() + ": ";
        emit(v, out, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out += ",\n";
        out += pad;
        emit(j[i], out, depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string encode_npy(const Tensor& t) {
  const char* descr = t.dtype() == DType::Float32 ? "<f4" : "<f8";
  std::string header = std::string("{'descr': '") + descr +
                       "', 'fortran_order': False, 'shape': " + shape_literal(t.shape()) + ", }";
  const std::size_t unpadded = kPreludeLen + header.size() + 1;
  header.append((kAlign - unpadded % kAlign) % kAlign, ' ');
  header += '\n';

  std::string out(kMagic, kMagicLen);
  out += '\x01';
  out += '\x00';
  append_le<std::uint16_t>(out, static_cast<std::uint16_t>(header.size()));
  out += header;
  out.reserve(out.size() + t.size() * dtype_size(t.dtype()));
  if (t.dtype() == DType::Float32) {
    for (float v : t.f32_data()) append_le(out, v);
  } else {
    for (double v : t.f64_data()) append_le(out, v);
  }
  return out;
}

Tensor decode_npy(std::string_view bytes) {
  if (bytes.size() < kMagicLen || bytes.substr(0, kMagicLen) != std::string_view(kMagic, kMagicLen)) {
    throw Error(Errc::MagicMismatch, "missing \\x93NUMPY magic");
  }
  if (bytes.size() < kPreludeLen) throw Error(Errc::TruncatedPayload, "file ends inside the prelude");
  if (bytes[6] != '\x01' || bytes[7] != '\x00') {
    throw Error(Errc::MalformedHeader, "only NPY version 1.0 is supported");
  }
  const std::size_t header_len = load_le<std::uint16_t>(bytes.data() + 8);
  if (bytes.size() < kPreludeLen + header_len) {
    throw Error(Errc::TruncatedPayload, "file ends inside the header");
  }
  std::string_view header = bytes.substr(kPreludeLen, header_len);
  while (!header.empty() && (header.back() == '\n' || header.back() == ' ')) header.remove_suffix(1);

  std::string descr;
  bool fortran = false;
  Shape shape;
  HeaderParser(header).parse(descr, fortran, shape);

  DType dtype;
  if (descr == "<f4") dtype = DType::Float32;
  else if (descr == "<f8") dtype = DType::Float64;
  else throw Error(Errc::UnsupportedDtype, "descr '" + descr + "' (need '<f4' or '<f8')");
  if (fortran) throw Error(Errc::FortranOrderUnsupported, "fortran_order True");

  const std::size_t n = shape_numel(shape);
  const std::size_t width = dtype_size(dtype);
  const std::string_view payload = bytes.substr(kPreludeLen + header_len);
  if (payload.size() != n * width) {
    throw Error(Errc::TruncatedPayload, "payload has " + std::to_string(payload.size()) +
                                            " bytes, expected " + std::to_string(n * width));
  }
  if (dtype == DType::Float32) {
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = load_le<float>(payload.data() + i * width);
    return Tensor::f32(std::move(shape), std::move(data));
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = load_le<double>(payload.data() + i * width);
  return Tensor::f64(std::move(shape), std::move(data));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::IoFailure, "read failed for " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

Tensor read_npy(const std::filesystem::path& path) { return decode_npy(read_text_file(path)); }

void write_npy(const Tensor& t, const std::filesystem::path& path) {
  write_text_file(path, encode_npy(t));
}

std::string dump_report(const nlohmann::json& report) {
  check_finite(report, "");
  std::string out;
  emit(report, out, 0);
  out += '\n';
  return out;
}

void write_report(const nlohmann::json& report, const std::filesystem::path& path) {
  write_text_file(path, dump_report(report));
}

nlohmann::json read_report(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::IoFailure, path.string() + ": " + e.what());
  }
}

std::string_view to_string(EmbeddingKind kind) noexcept {
  switch (kind) {
    case EmbeddingKind::ClassTable: return "class_table";
    case EmbeddingKind::TimestepGrid: return "timestep_grid";
    case EmbeddingKind::Condition: return "condition";
  }
  return "class_table";
}

EmbeddingKind embedding_kind_from_string(std::string_view s) {
  if (s == "class_table") return EmbeddingKind::ClassTable;
  if (s == "timestep_grid") return EmbeddingKind::TimestepGrid;
  if (s == "condition") return EmbeddingKind::Condition;
  throw Error(Errc::BadConfig, "unknown embedding kind '" + std::string(s) + "'");
}

void EmbeddingSet::validate() const {
  if (matrix.rank() != 2) throw Error(Errc::InvalidTensor, "embedding set must be rank-2");
  if (kind == EmbeddingKind::Condition && !meta.timestep_value) {
    throw Error(Errc::BadConfig, "condition embeddings require meta.timestep_value");
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& npy_path) {
  return npy_path.parent_path() / (npy_path.stem().string() + ".meta.json");
}

EmbeddingSet load_embedding_set(const std::filesystem::path& npy_path) {
  EmbeddingSet set;
  set.matrix = read_npy(npy_path);
  // A single vector is read as a one-row set, keeping its dtype.
  if (set.matrix.rank() == 1) {
    const std::size_t n = set.matrix.size();
    if (set.matrix.dtype() == DType::Float32) {
      const auto v = set.matrix.f32_data();
      set.matrix = Tensor::f32({1, n}, std::vector<float>(v.begin(), v.end()));
    } else {
      const auto v = set.matrix.f64_data();
      set.matrix = Tensor::f64({1, n}, std::vector<double>(v.begin(), v.end()));
    }
  }
  set.meta.model_name = npy_path.stem().string();
  const auto meta_path = sidecar_path(npy_path);
  if (std::filesystem::exists(meta_path)) {
    const auto j = read_report(meta_path);
    set.meta.model_name = j.value("model_name", set.meta.model_name);
    set.kind = embedding_kind_from_string(j.value("kind", std::string("class_table")));
    if (j.contains("timestep_value") && !j["timestep_value"].is_null()) {
      set.meta.timestep_value = j["timestep_value"].get<double>();
    }
    set.meta.notes = j.value("notes", std::string());
  }
  set.validate();
  return set;
}

void save_embedding_set(const EmbeddingSet& set, const std::filesystem::path& npy_path) {
  set.validate();
  write_npy(set.matrix, npy_path);
  nlohmann::json meta = {{"model_name", set.meta.model_name},
                         {"kind", std::string(to_string(set.kind))},
                         {"notes", set.meta.notes}};
  meta["timestep_value"] =
      set.meta.timestep_value ? nlohmann::json(*set.meta.timestep_value) : nlohmann::json(nullptr);
  write_report(meta, sidecar_path(npy_path));
}

}  // namespace condscope
