// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "condscope/tensor.hpp"

namespace condscope {

// NPY v1.0, C-order, little-endian float32/float64 only. Anything else is
// rejected with a specific error code instead of being converted.

std::string encode_npy(const Tensor& t);
Tensor decode_npy(std::string_view bytes);

Tensor read_npy(const std::filesystem::path& path);
void write_npy(const Tensor& t, const std::filesystem::path& path);

// JSON reports: sorted keys, shortest round-trip number formatting, and a
// hard failure on NaN/Inf anywhere in the tree.

/// Serializes `report` deterministically (2-space indent, trailing newline).
std::string dump_report(const nlohmann::json& report);
void write_report(const nlohmann::json& report, const std::filesystem::path& path);
nlohmann::json read_report(const std::filesystem::path& path);

/// Writes `content` verbatim; throws IoFailure on any stream error.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

enum class EmbeddingKind { ClassTable, TimestepGrid, Condition };

std::string_view to_string(EmbeddingKind kind) noexcept;
EmbeddingKind embedding_kind_from_string(std::string_view s);

struct EmbeddingMeta {
  std::string model_name;
  std::optional<double> timestep_value;
  std::string notes;
};

/// An N x d matrix of class, timestep, or condition embeddings.
struct EmbeddingSet {
  Tensor matrix;
  EmbeddingKind kind = EmbeddingKind::ClassTable;
  EmbeddingMeta meta;

  /// Throws InvalidTensor unless rank-2, and BadConfig when a condition set
  /// lacks its timestep.
  void validate() const;
};

/// `<dir>/<stem>.meta.json` next to `<dir>/<stem>.npy`.
std::filesystem::path sidecar_path(const std::filesystem::path& npy_path);

/// Loads the matrix and, if present, its sidecar. Without a sidecar the set
/// is treated as a class table named after the file stem. A rank-1 file
/// becomes a single row.
EmbeddingSet load_embedding_set(const std::filesystem::path& npy_path);
void save_embedding_set(const EmbeddingSet& set, const std::filesystem::path& npy_path);

}  // namespace condscope
