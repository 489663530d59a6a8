#include "lpq/analysis.hpp"

#include <cmath>

#include "lpq/inference.hpp"

namespace lpq {
namespace {

// Single-pass population statistics, double accumulation.
struct Welford {
  int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double min = 0.0;
  double max = 0.0;

  void push(double x) {
    if (count == 0) {
      min = max = x;
    } else {
      if (x < min) min = x;
      if (x > max) max = x;
    }
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void push_all(const float* data, int64_t n) {
    for (int64_t i = 0; i < n; ++i) push(static_cast<double>(data[i]));
  }

  double stddev() const {
    return count > 0 ? std::sqrt(m2 / static_cast<double>(count)) : 0.0;
  }
};

DistributionStats to_stats(const Welford& w, const std::string& layer_id,
                           Target target, int bw, int fl_cap) {
  DistributionStats s;
  s.layer_id = layer_id;
  s.target = target;
  s.min = w.min;
  s.max = w.max;
  s.mean = w.mean;
  s.stddev = w.stddev();
  s.sample_count = w.count;
  s.suggested_il = fit_il_from_max_abs(std::max(std::abs(w.min), std::abs(w.max)));
  s.suggested_fl = fit_fl(bw, s.suggested_il, fl_cap);
  return s;
}

}  // namespace

std::vector<DistributionStats> analyze_weights(const Network& net, int bw, int fl_cap) {
  std::vector<DistributionStats> stats;
  for (const auto& layer : net.layers) {
    if (!layer.has_weights()) continue;
    Welford w;
    for (const auto& [name, t] : layer.weights) w.push_all(t.data(), t.numel());
    stats.push_back(to_stats(w, layer.id, Target::Weights, bw, fl_cap));
  }
  return stats;
}

std::vector<DistributionStats> analyze_activations(const Network& net,
                                                   const std::vector<Tensor>& calib,
                                                   int bw, int fl_cap, int jobs) {
  if (calib.empty()) throw Error::shape("calibration batch is empty");
  const auto groups = fusion_groups(net);
  const auto outputs = infer_float(net, calib, jobs);

  std::vector<DistributionStats> stats;
  stats.reserve(groups.size());
  for (const auto& g : groups) {
    Welford w;
    // Merge order is fixed by sample index for reproducibility.
    for (const auto& sample : outputs) {
      const Tensor& t = sample[g.last];
      w.push_all(t.data(), t.numel());
    }
    stats.push_back(to_stats(w, net.layers[g.head].id, Target::Activations, bw, fl_cap));
  }
  return stats;
}

const DistributionStats* find_stats(const std::vector<DistributionStats>& stats,
                                    const std::string& layer_id, Target target) {
  for (const auto& s : stats)
    if (s.layer_id == layer_id && s.target == target) return &s;
  return nullptr;
}

}  // namespace lpq
