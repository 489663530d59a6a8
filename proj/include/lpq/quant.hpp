#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lpq/tensor.hpp"

namespace lpq {

struct Network;

enum class Target { Weights, Activations };
const char* target_name(Target t);
std::optional<Target> target_from_name(const std::string& name);

// Signed fixed-point format: value = code / 2^fl, code in
// [-2^(bw-1), 2^(bw-1)-1]. One of the bw bits is the sign bit, so the
// uncapped fractional length is bw - 1 - il.
struct FixedParams {
  int bw = 0;
  int il = 0;
  int fl = 0;
};

// IL = ceil(log2(max |v|)), computed exactly via frexp; 2^IL >= max |v|.
// All-zero input yields 0 by convention.
int fit_il_from_max_abs(double max_abs);
int fit_il(const float* values, size_t n);

// FL = min(bw - 1 - il, cap_y), clamped at 0.
int fit_fl(int bw, int il, int cap_y);

// Round-to-nearest (half away from zero), saturating at the code range.
int32_t quantize_fixed(float v, const FixedParams& p);
float dequantize_fixed(int32_t code, const FixedParams& p);

enum class KMeansKind { Linear, Gaussian };
const char* kmeans_kind_name(KMeansKind k);

// Uniform-step codebook over [lo, hi]: 2^bw equal intervals, one shared
// value per interval at the interval midpoint, stored as a fixed-point code
// with the table's own (bw, il, fl). A degenerate range keeps a single
// center that every value maps to.
struct KMeansTable {
  int bw = 0;
  double lo = 0.0;
  double hi = 0.0;
  KMeansKind kind = KMeansKind::Linear;
  FixedParams table_params;
  std::vector<int32_t> center_codes;

  int64_t intervals() const noexcept { return int64_t{1} << bw; }
  bool degenerate() const noexcept { return center_codes.size() == 1; }
  std::vector<float> centers() const;  // dequantized shared values
};

KMeansTable build_kmeans_table(double data_min, double data_max, double mean,
                               double stddev, int bw, KMeansKind kind,
                               double sigma_mult, int table_bw, int table_fl);

// Index assignment + reconstruction through the shared-value table.
struct KMeansMapped {
  std::vector<int32_t> indices;
  Tensor reconstructed;
};
KMeansMapped quantize_kmeans(const Tensor& values, const KMeansTable& table);

// Eq. 5: per-value compression ratio and total storage with the shared-value
// table counted. k must be a power of two.
struct MemorySaving {
  double per_value_ratio = 0.0;
  int64_t total_bits = 0;
};
MemorySaving memory_saving(int original_bw, int bw, int64_t k, int shared_bw,
                           int64_t n_values);

int64_t fixed_point_traffic(int64_t n_values, int bw);

enum class Technique { StandardFixed, DynamicFixed, KMeansLinear, KMeansGaussian };
const char* technique_name(Technique t);
std::optional<Technique> technique_from_name(const std::string& name);
bool technique_is_kmeans(Technique t);

// One fitted numeric representation for one layer-target.
struct QuantScheme {
  Technique technique = Technique::DynamicFixed;
  Target target = Target::Weights;
  int bw = 0;
  FixedParams fixed;                         // fixed-point techniques
  std::shared_ptr<const KMeansTable> table;  // k-means techniques

  bool is_kmeans() const { return technique_is_kmeans(technique); }
  bool fitted() const;
  // Bits needed to store/move n values under this scheme. Activation traffic
  // excludes the k-means table (static storage, not per-inference traffic).
  int64_t storage_bits(int64_t n_values) const;
  int64_t traffic_bits(int64_t n_values) const;
  std::string params_summary() const;  // e.g. "il=2 fl=5" or "K=16 tfl=12"
};

// Per-layer scheme selection for one network configuration.
struct LayerSchemes {
  std::optional<QuantScheme> weights;
  std::optional<QuantScheme> activations;
};

struct NetworkQuantConfig {
  std::map<std::string, LayerSchemes> entries;
  std::string provenance;

  bool empty() const noexcept { return entries.empty(); }
  // Checks layer ids exist, weights schemes sit on weighted layers,
  // activation schemes sit on fusion-group heads, and schemes are fitted.
  void validate(const Network& net) const;
  // Deterministic ordering key: (layer id, target, technique, bw) ascending.
  std::string sort_key() const;
};

// quantize->dequantize of a full tensor under a (weights) scheme.
Tensor apply_scheme(const Tensor& t, const QuantScheme& scheme);
Tensor fake_quant_fixed_tensor(const Tensor& t, const FixedParams& p);

}  // namespace lpq
