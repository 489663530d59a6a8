// Command-line front end: analyze -> explore -> select -> quantize, plus a
// deterministic reference-fixture generator. Exit codes: 0 ok, 1 usage,
// 2 I/O, 3 schema, 4 shape/validation, 5 infeasible selection.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpq/io.hpp"
#include "lpq/kernels.hpp"
#include "lpq/pipeline.hpp"
#include "lpq/reference.hpp"
#include "lpq/util.hpp"

namespace fs = std::filesystem;
using namespace lpq;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return 1;
    case ErrorKind::Io: return 2;
    case ErrorKind::Schema: return 3;
    case ErrorKind::Shape: return 4;
    case ErrorKind::Infeasible: return 5;
  }
  return 1;
}

struct CommonOpts {
  int64_t seed = 0;
  int jobs = 1;
  std::string kernels = "auto";
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--seed", c.seed, "Seed for calibration subsampling")
      ->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Worker threads for batch/sweep evaluation")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();
  cmd->add_option("--kernels", c.kernels, "Kernel backend: auto|scalar|avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}))
      ->capture_default_str();
}

void apply_kernels(const CommonOpts& c) {
  if (c.kernels == "scalar") kernels::set_backend(kernels::Backend::Scalar);
  else if (c.kernels == "avx2") kernels::set_backend(kernels::Backend::Avx2);
}

std::vector<Tensor> load_calibration(const fs::path& path, int batch_size,
                                     int64_t seed) {
  const auto records = io::read_container(path);
  if (records.empty()) throw Error::schema("calibration container is empty");
  std::vector<Tensor> samples;
  samples.reserve(records.size());
  for (const auto& r : records) samples.push_back(r.to_tensor());

  if (batch_size <= 0 || static_cast<size_t>(batch_size) >= samples.size())
    return samples;
  // Deterministic subsample: seeded shuffle, then restore file order.
  DetRng rng(static_cast<uint64_t>(seed));
  auto perm = rng.permutation(samples.size());
  perm.resize(static_cast<size_t>(batch_size));
  std::sort(perm.begin(), perm.end());
  std::vector<Tensor> picked;
  picked.reserve(perm.size());
  for (size_t i : perm) picked.push_back(std::move(samples[i]));
  return picked;
}

std::vector<Technique> parse_techniques(const std::vector<std::string>& names) {
  std::vector<Technique> out;
  for (const auto& n : names) {
    const auto t = technique_from_name(n);
    if (!t) throw Error::usage("unknown technique '" + n + "'");
    out.push_back(*t);
  }
  return out;
}

// ---- make-reference ----------------------------------------------------------

int cmd_make_reference(const fs::path& out_dir, uint64_t seed, int samples) {
  fs::create_directories(out_dir);
  const Network net = make_reference_network(seed);
  const auto desc = out_dir / "reference_net.json";
  const auto weights = out_dir / "reference_weights.lpqt";
  const auto calib = out_dir / "calibration.lpqt";

  io::save_description(net, desc);
  io::save_weights(net, weights);

  const auto batch = make_calibration_batch(net.input_shape, static_cast<size_t>(samples), seed);
  std::vector<io::TensorRecord> records;
  for (size_t i = 0; i < batch.size(); ++i) {
    io::TensorRecord r;
    char name[32];
    std::snprintf(name, sizeof name, "sample_%04zu", i);
    r.name = name;
    r.shape = batch[i].shape();
    r.tag = 0;
    r.floats = batch[i].values();
    records.push_back(std::move(r));
  }
  io::write_container(calib, records);

  nlohmann::json manifest;
  manifest["format"] = "lpq-manifest";
  manifest["version"] = 1;
  manifest["seed"] = seed;
  char hex[32];
  for (const auto& p : {desc, weights, calib}) {
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(io::fnv1a64_file(p)));
    manifest["checksums"][p.filename().string()] = hex;
  }
  const auto manifest_path = out_dir / "manifest.json";
  std::ofstream mf(manifest_path);
  if (!mf) throw Error::io("cannot write '" + manifest_path.string() + "'");
  mf << manifest.dump(2) << "\n";

  std::cout << "reference fixture written to " << out_dir.string() << "\n";
  return 0;
}

// ---- analyze ------------------------------------------------------------------

int cmd_analyze(const fs::path& model, const fs::path& weights, const fs::path& calib,
                const fs::path& out, int batch_size, std::vector<int> bits,
                const std::vector<std::string>& technique_names,
                std::vector<int> fl_range, int shared_bw, double sigma_mult,
                const CommonOpts& common) {
  const Network net = io::load_model(model, weights);
  const auto batch = load_calibration(calib, batch_size, common.seed);
  if (batch.size() == 1)
    std::cerr << "warning: single-sample calibration batch; first-layer stats may be"
                 " unrepresentative\n";

  io::ConfigFile cfg;
  cfg.metadata.seed = common.seed;
  cfg.metadata.batch_size = static_cast<int>(batch.size());
  cfg.metadata.shared_bw = shared_bw;
  cfg.metadata.sigma_mult = sigma_mult;
  cfg.metadata.fl_lo = fl_range.at(0);
  cfg.metadata.fl_hi = fl_range.at(1);
  cfg.metadata.bits = bits;
  cfg.metadata.techniques = parse_techniques(technique_names);

  cfg.stats = analyze_weights(net, 16, cfg.metadata.fl_hi);
  const auto act_stats =
      analyze_activations(net, batch, 16, cfg.metadata.fl_hi, common.jobs);
  const auto weight_stats = cfg.stats;
  cfg.stats.insert(cfg.stats.end(), act_stats.begin(), act_stats.end());

  FitOptions opt;
  opt.fl_lo = cfg.metadata.fl_lo;
  opt.fl_hi = cfg.metadata.fl_hi;
  opt.shared_bw = shared_bw;
  opt.sigma_mult = sigma_mult;
  opt.jobs = common.jobs;
  for (Technique tech : cfg.metadata.techniques)
    for (int bw : bits) {
      const auto fitted =
          fit_layer_params(net, weight_stats, act_stats, tech, bw, batch, opt);
      cfg.schemes.insert(fitted.begin(), fitted.end());
    }

  io::save_config(cfg, out);
  io::write_stats_table(cfg.stats, std::cout);
  std::cout << "fitted " << cfg.schemes.size() << " schemes -> " << out.string() << "\n";
  return 0;
}

// ---- explore ------------------------------------------------------------------

int cmd_explore(const fs::path& model, const fs::path& weights, const fs::path& calib,
                const fs::path& config_path, const fs::path& out,
                const std::string& mode_name, const std::vector<std::string>& layers,
                const std::string& targets_name, std::vector<int> bits,
                const std::vector<std::string>& technique_names, const fs::path& table,
                const fs::path& curve, int batch_size, const CommonOpts& common) {
  const Network net = io::load_model(model, weights);
  const io::ConfigFile cfg = io::load_config(config_path);
  const int effective_batch = batch_size > 0 ? batch_size : cfg.metadata.batch_size;
  const int64_t seed = common.seed != 0 ? common.seed : cfg.metadata.seed;
  const auto batch = load_calibration(calib, effective_batch, seed);

  SweepSpec spec;
  const auto mode = sweep_mode_from_name(mode_name);
  if (!mode) throw Error::usage("unknown sweep mode '" + mode_name + "'");
  spec.mode = *mode;
  const auto targets = target_sel_from_name(targets_name);
  if (!targets) throw Error::usage("unknown targets '" + targets_name + "'");
  spec.targets = *targets;
  spec.layers = layers;
  spec.bit_widths = bits.empty() ? cfg.metadata.bits : bits;
  spec.techniques = technique_names.empty() ? cfg.metadata.techniques
                                            : parse_techniques(technique_names);
  spec.fl_lo = cfg.metadata.fl_lo;
  spec.fl_hi = cfg.metadata.fl_hi;

  ExplorationReport report = explore(net, cfg.schemes, spec, batch, common.jobs);
  report.seed = seed;

  io::save_report(report, out);

  // Human table sorted by final distance (ties keep enumeration order).
  std::vector<int> order(report.rows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return report.rows[static_cast<size_t>(a)].result.final_distance <
           report.rows[static_cast<size_t>(b)].result.final_distance;
  });
  io::write_report_table(report, std::cout, &order);
  if (!table.empty()) {
    std::ofstream tf(table);
    if (!tf) throw Error::io("cannot write '" + table.string() + "'");
    io::write_report_table(report, tf, &order);
  }
  if (!curve.empty()) io::write_curve(report, curve);
  std::cout << report.rows.size() << " configurations -> " << out.string() << "\n";
  return 0;
}

// ---- select -------------------------------------------------------------------

int cmd_select(const fs::path& report_path, double max_distance, double min_saving,
               bool has_max_distance, bool has_min_saving, const fs::path& out) {
  if (has_max_distance == has_min_saving)
    throw Error::usage("select needs exactly one of --max-distance / --min-saving");
  const ExplorationReport report = io::load_report(report_path);
  SelectionConstraint constraint;
  constraint.kind = has_max_distance ? SelectionConstraint::Kind::MaxDistance
                                     : SelectionConstraint::Kind::MinSaving;
  constraint.value = has_max_distance ? max_distance : min_saving;
  const SelectionResult sel = select_best(report, constraint);
  if (!sel.feasible)
    throw Error::infeasible("no feasible configuration under the given constraint");

  const ReportRow& row = report.rows[static_cast<size_t>(sel.row_index)];
  io::ConfigMetadata meta;
  meta.seed = report.seed;
  meta.batch_size = report.batch_size;
  meta.fl_lo = report.spec.fl_lo;
  meta.fl_hi = report.spec.fl_hi;
  meta.bits = {row.bw};
  meta.techniques = {row.technique};
  io::save_selection(sel.config, meta, out);
  std::cout << "selected row " << sel.row_index << " (" << row.scope << ", "
            << technique_name(row.technique) << ", bw " << row.bw
            << ", L2 " << row.result.final_distance << ") -> " << out.string() << "\n";
  return 0;
}

// ---- quantize -----------------------------------------------------------------

int cmd_quantize(const fs::path& model, const fs::path& weights,
                 const fs::path& config_path, const fs::path& out) {
  const Network net = io::load_model(model, weights);
  const NetworkQuantConfig cfg = io::load_selection(config_path);
  cfg.validate(net);
  bool has_activations = false;
  for (const auto& [id, schemes] : cfg.entries)
    if (schemes.activations) has_activations = true;
  if (has_activations)
    std::cerr << "note: activation schemes are runtime configuration and are not"
                 " materialized into the bundle\n";
  io::write_bundle(net, cfg, out);
  std::cout << "bundle -> " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-training quantization workbench: per-layer analysis and"
               " network space exploration over fixed-point and k-means codebook"
               " representations"};
  app.require_subcommand(1);

  // make-reference
  auto* mr = app.add_subcommand("make-reference", "Write the deterministic reference"
                                                  " network, calibration set and checksum manifest");
  fs::path mr_out;
  uint64_t mr_seed = 7;
  int mr_samples = 60;
  mr->add_option("--out-dir", mr_out, "Output directory")->required();
  mr->add_option("--fixture-seed", mr_seed, "Weights/calibration seed")->capture_default_str();
  mr->add_option("--samples", mr_samples, "Calibration samples to generate")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();

  // analyze
  auto* an = app.add_subcommand("analyze", "Phase 1: per-layer distribution stats and"
                                           " fitted quantization parameters");
  fs::path an_model, an_weights, an_calib, an_out;
  int an_batch = 50;
  std::vector<int> an_bits{4, 8, 16};
  std::vector<std::string> an_techs{"standard-fixed", "dynamic-fixed", "kmeans-linear",
                                    "kmeans-gaussian"};
  std::vector<int> an_fl{8, 20};
  int an_shared_bw = 16;
  double an_sigma = 3.0;
  CommonOpts an_common;
  an->add_option("--model", an_model, "Network description (.json)")->required();
  an->add_option("--weights", an_weights, "Weights container (.lpqt)")->required();
  an->add_option("--calib", an_calib, "Calibration tensor container (.lpqt)")->required();
  an->add_option("--out", an_out, "Output configuration file")->required();
  an->add_option("--batch-size", an_batch, "Calibration samples to use")
      ->check(CLI::Range(1, 1 << 20))
      ->capture_default_str();
  an->add_option("--bits", an_bits, "Bit widths to fit")->delimiter(',')->capture_default_str();
  an->add_option("--techniques", an_techs, "Techniques to fit")->delimiter(',')->capture_default_str();
  an->add_option("--fl-range", an_fl, "FL search grid lo,hi")->delimiter(',')->expected(2)
      ->capture_default_str();
  an->add_option("--shared-bw", an_shared_bw, "K-means shared-value bit width")
      ->check(CLI::Range(1, 32))
      ->capture_default_str();
  an->add_option("--sigma-mult", an_sigma, "Gaussian range multiplier")->capture_default_str();
  add_common(an, an_common);

  // explore
  auto* ex = app.add_subcommand("explore", "Phase 2: network space exploration sweeps");
  fs::path ex_model, ex_weights, ex_calib, ex_config, ex_out, ex_table, ex_curve;
  std::string ex_mode = "single", ex_targets = "both";
  std::vector<std::string> ex_layers, ex_techs;
  std::vector<int> ex_bits;
  int ex_batch = 0;
  CommonOpts ex_common;
  ex->add_option("--model", ex_model, "Network description (.json)")->required();
  ex->add_option("--weights", ex_weights, "Weights container (.lpqt)")->required();
  ex->add_option("--calib", ex_calib, "Calibration tensor container (.lpqt)")->required();
  ex->add_option("--config", ex_config, "Configuration file from analyze")->required();
  ex->add_option("--out", ex_out, "Output report file")->required();
  ex->add_option("--mode", ex_mode, "Sweep mode: single|group|network")->capture_default_str();
  ex->add_option("--layers", ex_layers, "Layer ids (default: all eligible)")->delimiter(',');
  ex->add_option("--targets", ex_targets, "weights|activations|both")->capture_default_str();
  ex->add_option("--bits", ex_bits, "Bit widths (default: from config)")->delimiter(',');
  ex->add_option("--technique", ex_techs, "Techniques (default: from config)")->delimiter(',');
  ex->add_option("--table", ex_table, "Also write the human table to this file");
  ex->add_option("--curve", ex_curve, "Write a bw-vs-distance curve file");
  ex->add_option("--batch-size", ex_batch, "Calibration samples (default: from config)");
  add_common(ex, ex_common);

  // select
  auto* se = app.add_subcommand("select", "Pick the best configuration from a report");
  fs::path se_report, se_out;
  double se_maxd = 0.0, se_mins = 0.0;
  se->add_option("--report", se_report, "Report file from explore")->required();
  auto* se_maxd_opt = se->add_option("--max-distance", se_maxd,
                                     "Maximize savings subject to final L2 <= bound");
  auto* se_mins_opt = se->add_option("--min-saving", se_mins,
                                     "Minimize final L2 subject to combined saving % >= floor");
  se->add_option("--out", se_out, "Output selected configuration")->required();

  // quantize
  auto* qu = app.add_subcommand("quantize", "Materialize a selected configuration into"
                                            " a deployable bundle");
  fs::path qu_model, qu_weights, qu_config, qu_out;
  qu->add_option("--model", qu_model, "Network description (.json)")->required();
  qu->add_option("--weights", qu_weights, "Weights container (.lpqt)")->required();
  qu->add_option("--config", qu_config, "Selected configuration")->required();
  qu->add_option("--out", qu_out, "Output bundle (.lpqt)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (mr->parsed()) return cmd_make_reference(mr_out, mr_seed, mr_samples);
    if (an->parsed()) {
      apply_kernels(an_common);
      return cmd_analyze(an_model, an_weights, an_calib, an_out, an_batch, an_bits,
                         an_techs, an_fl, an_shared_bw, an_sigma, an_common);
    }
    if (ex->parsed()) {
      apply_kernels(ex_common);
      return cmd_explore(ex_model, ex_weights, ex_calib, ex_config, ex_out, ex_mode,
                         ex_layers, ex_targets, ex_bits, ex_techs, ex_table, ex_curve,
                         ex_batch, ex_common);
    }
    if (se->parsed())
      return cmd_select(se_report, se_maxd, se_mins, se_maxd_opt->count() > 0,
                        se_mins_opt->count() > 0, se_out);
    if (qu->parsed()) return cmd_quantize(qu_model, qu_weights, qu_config, qu_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
