#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lpq/analysis.hpp"
#include "lpq/net.hpp"
#include "lpq/pipeline.hpp"
#include "lpq/quant.hpp"

namespace lpq::io {

// ---- tensor container (.lpqt) ----------------------------------------------
// Little-endian binary container for named tensors; full byte layout in
// docs/formats.md. Record payloads are float32 (tag 0), packed fixed-point
// codes (tag 1), or packed k-means indices plus a shared-value table (tag 2).

struct TensorRecord {
  std::string name;
  Shape shape;
  // tag 0
  std::vector<float> floats;
  // tag 1 / 2
  uint8_t tag = 0;
  FixedParams fixed;                 // tag 1: code format; tag 2: table format
  std::vector<int32_t> codes;        // tag 1: codes; tag 2: indices
  int bw = 0;                        // tag 2: index width
  double lo = 0.0, hi = 0.0;         // tag 2: range
  KMeansKind kind = KMeansKind::Linear;
  std::vector<int32_t> center_codes; // tag 2

  // Decoded float view of any record kind.
  Tensor to_tensor() const;
};

void write_container(const std::filesystem::path& path,
                     const std::vector<TensorRecord>& records);
std::vector<TensorRecord> read_container(const std::filesystem::path& path);

uint64_t fnv1a64_file(const std::filesystem::path& path);

// ---- network description (.json) -------------------------------------------
Network load_description(const std::filesystem::path& path);
void save_description(const Network& net, const std::filesystem::path& path);

// Description + weights (or quantized bundle) -> validated network.
Network load_model(const std::filesystem::path& description,
                   const std::filesystem::path& weights);

void save_weights(const Network& net, const std::filesystem::path& path);

// ---- configuration file (.json) ---------------------------------------------
struct ConfigMetadata {
  int64_t seed = 0;
  int batch_size = 50;
  int shared_bw = 16;
  double sigma_mult = 3.0;
  int fl_lo = 8;
  int fl_hi = 20;
  std::vector<int> bits;
  std::vector<Technique> techniques;
};

struct ConfigFile {
  ConfigMetadata metadata;
  std::vector<DistributionStats> stats;
  FittedSchemes schemes;
  std::optional<SweepSpec> sweep;
};

void save_config(const ConfigFile& cfg, const std::filesystem::path& path);
ConfigFile load_config(const std::filesystem::path& path);
std::string config_to_string(const ConfigFile& cfg);  // canonical form
ConfigFile config_from_string(const std::string& text);

// ---- exploration report ------------------------------------------------------
void save_report(const ExplorationReport& report, const std::filesystem::path& path);
ExplorationReport load_report(const std::filesystem::path& path);
std::string report_to_string(const ExplorationReport& report);

// Human table: layer/group, technique, BW, params, L2, savings columns.
// Rows ordered by the given permutation (default: enumeration order).
void write_report_table(const ExplorationReport& report, std::ostream& os,
                        const std::vector<int>* order = nullptr);
// Plain columnar bw-vs-distance curve (whole-network style sweeps).
void write_curve(const ExplorationReport& report, const std::filesystem::path& path);

void write_stats_table(const std::vector<DistributionStats>& stats, std::ostream& os);

// ---- quantized bundle ---------------------------------------------------------
// Weights container with cfg's weights schemes materialized: tag-1 records
// for fixed-point layers, tag-2 for k-means layers, tag-0 pass-through
// otherwise. An empty config reproduces the input container byte for byte.
void write_bundle(const Network& net, const NetworkQuantConfig& cfg,
                  const std::filesystem::path& path);

// Selected configuration -> minimal scheme list (for cmd_select output).
void save_selection(const NetworkQuantConfig& cfg, const ConfigMetadata& meta,
                    const std::filesystem::path& path);
NetworkQuantConfig load_selection(const std::filesystem::path& path);

}  // namespace lpq::io
