// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "condscope/error.hpp"
#include "condscope/io.hpp"
#include "condscope/metrics.hpp"
#include "condscope/pruning.hpp"
#include "condscope/sampler.hpp"
#include "condscope/sparsekernel.hpp"
#include "condscope/toydit.hpp"

namespace condscope::cli {
namespace {

namespace fs = std::filesystem;

/// Thrown for malformed flag values that CLI11 cannot catch on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_double(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw UsageError(std::string("invalid ") + what + " value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

std::size_t parse_size(const std::string& s, const char* what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!s.empty() && s[0] == '-') throw UsageError("");
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw UsageError(std::string("invalid ") + what + " '" + s + "'");
  return static_cast<std::size_t>(v);
}

/// "AUTO40" -> 0.40; nullopt for anything else.
std::optional<double> parse_auto(const std::string& s) {
  if (s.rfind("AUTO", 0) != 0) return std::nullopt;
  const std::string pct = s.substr(4);
  const double v = parse_double_list(pct, "AUTO percentage").at(0);
  if (!(v > 0.0 && v < 100.0)) throw UsageError("AUTO percentage must lie in (0, 100)");
  return v / 100.0;
}

PruneSchedule parse_schedule(const std::string& s, std::size_t n_steps) {
  if (s == "every") return PruneSchedule::every_step();
  if (s == "initial") return PruneSchedule::initial_only();
  if (s == "lastk") return PruneSchedule::last_k_steps(default_last_k(n_steps));
  if (s.rfind("lastk:", 0) == 0) return PruneSchedule::last_k_steps(parse_size(s.substr(6), "lastk steps"));
  throw UsageError("unknown schedule '" + s + "' (expected every, initial, lastk or lastk:K)");
}

bool is_threshold_mode(PruneMode m) { return m == PruneMode::Tail || m == PruneMode::Head; }

/// Column means of |rows|, the reference vector for AUTO thresholds.
std::vector<double> reference_magnitude(const Tensor& m) { return mean_abs_rows(m); }

// Errors that stem from flag values rather than data.
bool is_usage_errc(Errc c) {
  switch (c) {
    case Errc::BadConfig:
    case Errc::BadSchedule:
    case Errc::BadParams:
    case Errc::BadTimestep:
    case Errc::NonPositiveTau:
    case Errc::KTooLarge:
    case Errc::OddDim:
      return true;
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string emb;
  std::string timestep_emb;
  std::string mode;
  std::string taus = "0.01";
  std::string out;
  std::optional<std::size_t> exclude_row;
  bool per_row = false;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  AnalysisOptions opts;
  opts.taus = parse_double_list(a.taus, "tau");
  opts.exclude_row = a.exclude_row;
  opts.pr_mode = a.per_row ? PrMode::PerRow : PrMode::MeanAbs;
  const std::string mode = a.mode.empty() ? (a.timestep_emb.empty() ? "y" : "y+t") : a.mode;
  ConditionPart part;
  try {
    part = condition_part_from_string(mode);
  } catch (const Error&) {
    throw UsageError("--mode must be y, t or y+t");
  }
  if (part == ConditionPart::YPlusT && a.timestep_emb.empty()) throw UsageError("--mode y+t requires --timestep-emb");

  const EmbeddingSet primary = load_embedding_set(a.emb);
  AnalysisReport report;
  if (part == ConditionPart::YPlusT) {
    const EmbeddingSet t = load_embedding_set(a.timestep_emb);
    report = analyze_embeddings(add_rows(primary.matrix, t.matrix), part, opts);
    report.source_kind = std::string(to_string(EmbeddingKind::Condition));
    report.model_name = primary.meta.model_name;
  } else if (part == ConditionPart::T && !a.timestep_emb.empty()) {
    report = analyze_embedding_set(load_embedding_set(a.timestep_emb), part, opts);
  } else {
    report = analyze_embedding_set(primary, part, opts);
  }
  if (!a.out.empty()) write_report(report.to_json(), a.out);

  out << "cosine_mean=" << (report.cosine ? fmt_double("%.6f", report.cosine->mean_offdiag) : std::string("NA"))
      << " npr=" << fmt_double("%.6f", report.sparsity.npr) << " pr=" << fmt_double("%.4f", report.sparsity.pr)
      << " d=" << report.sparsity.d << " rows=" << report.n_rows << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct PruneArgs {
  std::string emb;
  std::string mode;
  std::string tau;
  std::optional<std::size_t> k;
  std::string out;
  bool count_only = false;
};

int cmd_prune(const PruneArgs& a, std::ostream& out) {
  PruneMode mode;
  try {
    mode = prune_mode_from_string(a.mode);
  } catch (const Error&) {
    throw UsageError("unknown --mode '" + a.mode + "'");
  }
  if (!a.count_only && a.out.empty()) throw UsageError("--out is required unless --count-only is given");

  const Tensor input = read_npy(a.emb);
  const bool vector_input = input.rank() == 1;
  const std::size_t d = vector_input ? input.size() : input.cols();
  const std::size_t n_rows = vector_input ? 1 : input.rows();
  const std::vector<double> flat = input.to_f64();

  PruneConfig cfg{mode, std::nullopt, a.k};
  if (!a.tau.empty()) {
    if (const auto frac = parse_auto(a.tau)) {
      if (mode != PruneMode::Tail) throw UsageError("AUTO thresholds apply to tail mode only");
      const Tensor as_rows = Tensor::matrix(n_rows, d, flat);
      cfg.tau = tau_for_tail_fraction(reference_magnitude(as_rows), *frac);
    } else {
      cfg.tau = parse_double_list(a.tau, "tau").at(0);
    }
  }
  if (is_threshold_mode(mode) && !cfg.tau) throw UsageError("--mode " + a.mode + " needs --tau");
  if (!is_threshold_mode(mode) && !cfg.k) throw UsageError("--mode " + a.mode + " needs --k");
  cfg.validate();

  std::vector<double> pruned(flat.size());
  RemovedCount total;
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::span<const double> row(flat.data() + r * d, d);
    const RemovedCount rc = removed_count(row, cfg);
    total.removed += rc.removed;
    total.total += rc.total;
    const std::vector<double> p = prune(row, cfg);
    std::copy(p.begin(), p.end(), pruned.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  total.fraction = total.total ? static_cast<double>(total.removed) / static_cast<double>(total.total) : 0.0;

  if (a.count_only) {
    out << total.table_format() << "\n";
    return kOk;
  }
  Tensor result;
  if (input.dtype() == DType::Float32) {
    result = Tensor::f32(input.shape(), std::vector<float>(pruned.begin(), pruned.end()));
  } else {
    result = Tensor::f64(input.shape(), std::move(pruned));
  }
  write_npy(result, a.out);
  const fs::path meta_in = sidecar_path(a.emb);
  if (fs::exists(meta_in)) {
    fs::copy_file(meta_in, sidecar_path(a.out), fs::copy_options::overwrite_existing);
  }
  out << "removed=" << total.removed << " total=" << total.total
      << " fraction=" << fmt_double("%.6f", total.fraction);
  if (cfg.tau) out << " tau=" << fmt_double("%.9g", *cfg.tau);
  out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string trace;
  std::string ckpt;
  bool quiet = false;
};

int cmd_train_toy(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  toy::ToyConfig cfg;
  if (!a.config.empty()) cfg = toy::ToyConfig::from_json(read_report(a.config));
  cfg.validate();
  toy::ProgressFn progress;
  if (!a.quiet) {
    progress = [&](const toy::TraceRow& r) {
      err << "step " << r.step << " loss " << fmt_double("%.5f", r.loss) << " cosine "
          << fmt_double("%.4f", r.cosine) << " npr " << fmt_double("%.4f", r.npr) << "\n";
    };
  }
  toy::TrainResult result;
  try {
    result = toy::train(cfg, progress);
  } catch (const toy::TrainingDiverged& e) {
    if (!a.trace.empty()) write_text_file(a.trace, toy::trace_to_csv(e.trace()));
    throw;
  }
  if (!a.trace.empty()) write_text_file(a.trace, toy::trace_to_csv(result.trace));
  if (!a.ckpt.empty()) toy::save_checkpoint(result.params, a.ckpt);
  const toy::TraceRow& first = result.trace.front();
  const toy::TraceRow& last = result.trace.back();
  out << "steps=" << last.step << " loss=" << fmt_double("%.6f", last.loss)
      << " cosine=" << fmt_double("%.6f", first.cosine) << "->" << fmt_double("%.6f", last.cosine)
      << " npr=" << fmt_double("%.6f", first.npr) << "->" << fmt_double("%.6f", last.npr)
      << " rows=" << result.trace.size() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string ckpt;
  std::size_t per_class = 500;
  std::string prune;
  std::string schedule = "every";
  std::string out;
  std::string eval;
  std::uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  const toy::ModelParams params = toy::load_checkpoint(a.ckpt);
  const auto n_steps = static_cast<std::size_t>(params.config.n_timesteps);
  SampleOptions opts;
  opts.schedule = parse_schedule(a.schedule, n_steps);
  opts.schedule.validate(n_steps);

  nlohmann::json auto_info = nullptr;
  if (!a.prune.empty()) {
    const auto colon = a.prune.find(':');
    if (colon == std::string::npos) throw UsageError("--prune expects mode:value, e.g. tail:0.01 or zero-top-k:6");
    PruneMode mode;
    try {
      mode = prune_mode_from_string(a.prune.substr(0, colon));
    } catch (const Error&) {
      throw UsageError("unknown prune mode in '" + a.prune + "'");
    }
    const std::string value = a.prune.substr(colon + 1);
    PruneConfig cfg{mode, std::nullopt, std::nullopt};
    if (is_threshold_mode(mode)) {
      if (const auto frac = parse_auto(value)) {
        if (mode != PruneMode::Tail) throw UsageError("AUTO thresholds apply to tail mode only");
        const Tensor ref = [&] {
          const toy::Mat c = toy::class_conditions(params, params.config.n_timesteps);
          std::vector<double> rows;
          for (Eigen::Index r = 0; r < c.rows(); ++r)
            for (Eigen::Index k = 0; k < c.cols(); ++k) rows.push_back(c(r, k));
          return Tensor::matrix(static_cast<std::size_t>(c.rows()), static_cast<std::size_t>(c.cols()), rows);
        }();
        const std::vector<double> mag = reference_magnitude(ref);
        cfg.tau = tau_for_tail_fraction(mag, *frac);
        auto_info = {{"target_fraction", *frac},
                     {"reference", "mean |c| over classes at t=T"},
                     {"reference_removed", removed_count(mag, cfg).table_format()}};
      } else {
        cfg.tau = parse_double_list(value, "tau").at(0);
      }
    } else {
      cfg.k = parse_size(value, "k");
    }
    cfg.validate();
    if (cfg.k && *cfg.k > static_cast<std::size_t>(params.config.cond_dim)) {
      throw UsageError("k exceeds the condition dimension " + std::to_string(params.config.cond_dim));
    }
    opts.prune = cfg;
  }

  const SampleRun run = sample_all_classes(params, a.per_class, opts, a.seed);
  const toy::MixtureSpec spec{params.config.n_classes};
  const MixtureEval ev = eval_mixture(run.samples, run.labels, spec.means(), spec.sigma);
  if (!a.out.empty()) write_npy(run.samples, a.out);
  if (!a.eval.empty()) {
    nlohmann::json j = {{"eval", ev.to_json()},
                        {"per_class", a.per_class},
                        {"seed", a.seed},
                        {"n_timesteps", params.config.n_timesteps},
                        {"label_order", "class-major, per_class samples each"},
                        {"prune", opts.prune ? opts.prune->to_json() : nlohmann::json(nullptr)},
                        {"schedule", opts.prune ? opts.schedule.to_json() : nlohmann::json(nullptr)},
                        {"auto_tau", auto_info}};
    write_report(j, a.eval);
  }
  out << "n=" << ev.n_samples << " accuracy=" << fmt_double("%.6f", ev.class_accuracy)
      << " mean_error=" << fmt_double("%.6f", ev.mean_error()) << " cov_error=" << fmt_double("%.6f", ev.cov_error());
  if (opts.prune && opts.prune->tau) out << " tau=" << fmt_double("%.9g", *opts.prune->tau);
  out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::size_t d = 1152;
  std::size_t out_dim = 2304;
  std::string sparsity = "0.9";
  std::size_t iters = 1000;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_bench_sparse(const BenchArgs& a, std::ostream& out) {
  const std::vector<double> levels = parse_double_list(a.sparsity, "sparsity");
  for (double s : levels) {
    if (!(s >= 0.0 && s < 1.0)) throw UsageError("sparsity must lie in [0, 1)");
  }
  if (a.iters < 100) throw UsageError("--iters must be >= 100");
  std::vector<BenchReport> reports;
  for (double s : levels) reports.push_back(bench(a.d, a.out_dim, s, a.iters, a.seed));
  const bool all_equal = std::all_of(reports.begin(), reports.end(), [](const BenchReport& r) { return r.checksums_equal; });

  if (levels.size() == 1) {
    if (!a.out.empty()) write_report(reports[0].to_json(), a.out);
  } else if (!a.out.empty()) {
    std::string csv = "d,out_dim,sparsity,nnz,iters,dense_ns_per_op,sparse_ns_per_op,speedup,checksums_equal\n";
    char buf[256];
    for (const BenchReport& r : reports) {
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%zu,%zu,%.6g,%.6g,%.6g,%s\n", r.d, r.out_dim, r.sparsity, r.nnz,
                    r.iters, r.dense_ns_per_op, r.sparse_ns_per_op, r.speedup, r.checksums_equal ? "true" : "false");
      csv += buf;
    }
    write_text_file(a.out, csv);
  }
  out << "runs=" << reports.size();
  for (const BenchReport& r : reports) out << " speedup@" << fmt_double("%g", r.sparsity) << "=" << fmt_double("%.3f", r.speedup);
  out << " checksums_equal=" << (all_equal ? "true" : "false") << "\n";
  return all_equal ? kOk : kData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Condition-vector analysis, pruning and toy diffusion experiments", "condscope"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Metrics report for an embedding matrix");
  analyze->add_option("emb", an.emb, "Embedding NPY (N x d)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--timestep-emb", an.timestep_emb, "Timestep embedding NPY")->check(CLI::ExistingFile);
  analyze->add_option("--mode", an.mode, "y, t or y+t");
  analyze->add_option("--tau", an.taus, "Comma-separated thresholds");
  analyze->add_option("--out", an.out, "Report JSON path");
  analyze->add_option("--exclude-row", an.exclude_row, "Row to drop before analysis");
  analyze->add_flag("--per-row-pr", an.per_row, "Also report PR for every row");

  PruneArgs pr;
  auto* prune_cmd = app.add_subcommand("prune", "Zero coordinates of every row");
  prune_cmd->add_option("emb", pr.emb, "Embedding NPY")->required()->check(CLI::ExistingFile);
  prune_cmd->add_option("--mode", pr.mode, "tail, head, keep-top-k or zero-top-k")->required();
  auto* tau_opt = prune_cmd->add_option("--tau", pr.tau, "Threshold, or AUTO<pct> for tail");
  auto* k_opt = prune_cmd->add_option("--k", pr.k, "Coordinate count for top-k modes");
  tau_opt->excludes(k_opt);
  prune_cmd->add_option("--out", pr.out, "Output NPY");
  prune_cmd->add_flag("--count-only", pr.count_only, "Print removed/total (pct%) and write nothing");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train-toy", "Train the toy AdaLN diffusion model");
  train_cmd->add_option("--config", tr.config, "Config JSON; defaults apply to missing keys")->check(CLI::ExistingFile);
  train_cmd->add_option("--trace", tr.trace, "Trace CSV path");
  train_cmd->add_option("--ckpt", tr.ckpt, "Checkpoint directory");
  train_cmd->add_flag("--quiet", tr.quiet, "No progress on stderr");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "DDPM sampling with optional condition pruning");
  sample_cmd->add_option("--ckpt", sa.ckpt, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  sample_cmd->add_option("--per-class", sa.per_class, "Samples per class");
  sample_cmd->add_option("--prune", sa.prune, "mode:value, e.g. tail:0.01, tail:AUTO40, zero-top-k:6");
  sample_cmd->add_option("--schedule", sa.schedule, "every, initial, lastk or lastk:K");
  sample_cmd->add_option("--out", sa.out, "Samples NPY (n x 2)");
  sample_cmd->add_option("--eval", sa.eval, "Evaluation JSON");
  sample_cmd->add_option("--seed", sa.seed, "Sampling seed");

  BenchArgs be;
  auto* bench_cmd = app.add_subcommand("bench-sparse", "Dense vs sparse matrix-vector timing");
  bench_cmd->add_option("--d", be.d, "Input dimension");
  bench_cmd->add_option("--out-dim", be.out_dim, "Output dimension");
  bench_cmd->add_option("--sparsity", be.sparsity, "Fraction of zeros; a comma list runs a sweep");
  bench_cmd->add_option("--iters", be.iters, "Timed iterations (>= 100)");
  bench_cmd->add_option("--seed", be.seed, "Seed");
  bench_cmd->add_option("--out", be.out, "JSON for one level, CSV for a sweep");

  std::vector<const char*> argv{"condscope"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(an, out);
    if (prune_cmd->parsed()) return cmd_prune(pr, out);
    if (train_cmd->parsed()) return cmd_train_toy(tr, out, err);
    if (sample_cmd->parsed()) return cmd_sample(sa, out);
    if (bench_cmd->parsed()) return cmd_bench_sparse(be, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ZeroNormRowError& e) {
    err << "error: " << e.what() << "\nrow index: " << e.row() << "\n";
    return kData;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_usage_errc(e.code()) ? kUsage : kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace condscope::cli
