#include "lpq/quant.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "kernels_detail.hpp"
#include "lpq/kernels.hpp"
#include "lpq/net.hpp"

namespace lpq {

const char* target_name(Target t) {
  return t == Target::Weights ? "weights" : "activations";
}

std::optional<Target> target_from_name(const std::string& name) {
  if (name == "weights") return Target::Weights;
  if (name == "activations") return Target::Activations;
  return std::nullopt;
}

int fit_il_from_max_abs(double max_abs) {
  if (!(max_abs > 0.0)) return 0;  // all-zero convention
  int e = 0;
  const double m = std::frexp(max_abs, &e);  // max_abs = m * 2^e, m in [0.5, 1)
  return m == 0.5 ? e - 1 : e;               // exact ceil(log2(max_abs))
}

int fit_il(const float* values, size_t n) {
  float max_abs = 0.0f;
  for (size_t i = 0; i < n; ++i) {
    const float a = std::fabs(values[i]);
    if (a > max_abs) max_abs = a;
  }
  return fit_il_from_max_abs(static_cast<double>(max_abs));
}

int fit_fl(int bw, int il, int cap_y) {
  return std::max(std::min(bw - 1 - il, cap_y), 0);
}

int32_t quantize_fixed(float v, const FixedParams& p) {
  const kernels::detail::FqConsts c = kernels::detail::fq_consts(p.bw, p.fl);
  return static_cast<int32_t>(kernels::detail::quantize_one(static_cast<double>(v), c));
}

float dequantize_fixed(int32_t code, const FixedParams& p) {
  return static_cast<float>(static_cast<double>(code) * std::ldexp(1.0, -p.fl));
}

const char* kmeans_kind_name(KMeansKind k) {
  return k == KMeansKind::Linear ? "linear" : "gaussian";
}

std::vector<float> KMeansTable::centers() const {
  std::vector<float> out(center_codes.size());
  for (size_t i = 0; i < center_codes.size(); ++i)
    out[i] = dequantize_fixed(center_codes[i], table_params);
  return out;
}

KMeansTable build_kmeans_table(double data_min, double data_max, double mean,
                               double stddev, int bw, KMeansKind kind,
                               double sigma_mult, int table_bw, int table_fl) {
  if (bw < 1 || bw > 16)
    throw Error::schema("k-means bit width must be in 1..16, got " + std::to_string(bw));
  KMeansTable t;
  t.bw = bw;
  t.kind = kind;
  if (kind == KMeansKind::Linear) {
    t.lo = data_min;
    t.hi = data_max;
  } else if (stddev > 0.0) {
    t.lo = mean - sigma_mult * stddev;
    t.hi = mean + sigma_mult * stddev;
  } else {
    t.lo = t.hi = mean;  // constant data: degenerate single-center range
  }
  const int64_t k = int64_t{1} << bw;
  std::vector<double> mids;
  if (!(t.hi > t.lo)) {
    mids.assign(1, t.lo);  // degenerate range: one shared value
  } else {
    const double step = (t.hi - t.lo) / static_cast<double>(k);
    mids.resize(static_cast<size_t>(k));
    for (int64_t i = 0; i < k; ++i)
      mids[static_cast<size_t>(i)] = t.lo + (static_cast<double>(i) + 0.5) * step;
  }
  double max_abs = 0.0;
  for (double m : mids) max_abs = std::max(max_abs, std::abs(m));
  t.table_params.bw = table_bw;
  t.table_params.il = fit_il_from_max_abs(max_abs);
  t.table_params.fl = table_fl;
  t.center_codes.resize(mids.size());
  for (size_t i = 0; i < mids.size(); ++i)
    t.center_codes[i] = quantize_fixed(static_cast<float>(mids[i]), t.table_params);
  return t;
}

KMeansMapped quantize_kmeans(const Tensor& values, const KMeansTable& table) {
  KMeansMapped out;
  out.indices.resize(static_cast<size_t>(values.numel()));
  std::vector<float> rec(static_cast<size_t>(values.numel()));
  const std::vector<float> centers = table.centers();
  kernels::active().kmeans_map(values.data(), rec.data(), out.indices.data(),
                               rec.size(), table.lo, table.hi, table.intervals(),
                               centers.data());
  out.reconstructed = Tensor(values.shape(), std::move(rec));
  return out;
}

MemorySaving memory_saving(int original_bw, int bw, int64_t k, int shared_bw,
                           int64_t n_values) {
  if (k <= 0 || (k & (k - 1)) != 0)
    throw Error::schema("interval count must be a power of two, got " + std::to_string(k));
  if (bw < 1 || bw > 62 || (int64_t{1} << bw) != k)
    throw Error::schema("interval count " + std::to_string(k) +
                        " does not match bit width " + std::to_string(bw));
  MemorySaving s;
  s.per_value_ratio = static_cast<double>(bw) / static_cast<double>(original_bw);
  s.total_bits = n_values * bw + k * shared_bw;
  return s;
}

int64_t fixed_point_traffic(int64_t n_values, int bw) {
  return n_values * static_cast<int64_t>(bw);
}

const char* technique_name(Technique t) {
  switch (t) {
    case Technique::StandardFixed: return "standard-fixed";
    case Technique::DynamicFixed: return "dynamic-fixed";
    case Technique::KMeansLinear: return "kmeans-linear";
    case Technique::KMeansGaussian: return "kmeans-gaussian";
  }
  return "?";
}

std::optional<Technique> technique_from_name(const std::string& name) {
  if (name == "standard-fixed") return Technique::StandardFixed;
  if (name == "dynamic-fixed") return Technique::DynamicFixed;
  if (name == "kmeans-linear") return Technique::KMeansLinear;
  if (name == "kmeans-gaussian") return Technique::KMeansGaussian;
  return std::nullopt;
}

bool technique_is_kmeans(Technique t) {
  return t == Technique::KMeansLinear || t == Technique::KMeansGaussian;
}

bool QuantScheme::fitted() const {
  if (bw < 1 || bw > 32) return false;
  if (is_kmeans()) return table != nullptr && !table->center_codes.empty();
  return fixed.bw == bw && fixed.fl >= 0 && fixed.fl <= 32;
}

int64_t QuantScheme::storage_bits(int64_t n_values) const {
  if (is_kmeans())
    return n_values * bw + table->intervals() * table->table_params.bw;
  return n_values * bw;
}

int64_t QuantScheme::traffic_bits(int64_t n_values) const {
  return n_values * bw;  // k-means table is static storage, not traffic
}

std::string QuantScheme::params_summary() const {
  std::ostringstream os;
  if (is_kmeans()) {
    os << "K=" << table->intervals() << " range=[" << table->lo << ',' << table->hi
       << "] tbw=" << table->table_params.bw << " tfl=" << table->table_params.fl;
  } else {
    os << "il=" << fixed.il << " fl=" << fixed.fl;
  }
  return os.str();
}

void NetworkQuantConfig::validate(const Network& net) const {
  const auto groups = fusion_groups(net);
  for (const auto& [layer_id, schemes] : entries) {
    const int idx = net.layer_index(layer_id);
    if (idx < 0)
      throw Error::schema("config references unknown layer '" + layer_id + "'");
    const Layer& layer = net.layers[static_cast<size_t>(idx)];
    if (schemes.weights) {
      if (!layer.has_weights())
        throw Error::schema("weights scheme on weightless layer '" + layer_id + "'");
      if (!schemes.weights->fitted())
        throw Error::schema("unfitted weights scheme on layer '" + layer_id + "'");
    }
    if (schemes.activations) {
      bool is_head = false;
      for (const auto& g : groups)
        if (g.head == static_cast<size_t>(idx)) { is_head = true; break; }
      if (!is_head)
        throw Error::schema("activation scheme on fused layer '" + layer_id +
                            "' (configure the fusion-group head instead)");
      if (!schemes.activations->fitted())
        throw Error::schema("unfitted activations scheme on layer '" + layer_id + "'");
    }
    if (!schemes.weights && !schemes.activations)
      throw Error::schema("empty scheme entry for layer '" + layer_id + "'");
  }
}

std::string NetworkQuantConfig::sort_key() const {
  std::ostringstream os;
  for (const auto& [layer_id, schemes] : entries) {
    for (const QuantScheme* s : {schemes.weights ? &*schemes.weights : nullptr,
                                 schemes.activations ? &*schemes.activations : nullptr}) {
      if (!s) continue;
      char bw2[4];
      std::snprintf(bw2, sizeof bw2, "%02d", s->bw);
      os << layer_id << '/' << target_name(s->target) << '/'
         << technique_name(s->technique) << '/' << bw2 << ';';
    }
  }
  return os.str();
}

Tensor fake_quant_fixed_tensor(const Tensor& t, const FixedParams& p) {
  std::vector<float> out(static_cast<size_t>(t.numel()));
  kernels::active().fake_quant_fixed(t.data(), out.data(), out.size(), p.bw, p.fl);
  return Tensor(t.shape(), std::move(out));
}

Tensor apply_scheme(const Tensor& t, const QuantScheme& scheme) {
  if (scheme.is_kmeans()) return quantize_kmeans(t, *scheme.table).reconstructed;
  return fake_quant_fixed_tensor(t, scheme.fixed);
}

}  // namespace lpq
