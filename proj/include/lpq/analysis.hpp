#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lpq/net.hpp"
#include "lpq/quant.hpp"

namespace lpq {

// Phase-1 distribution record for one layer-target group. Variance is the
// population variance of the observed samples, accumulated Welford-style in
// double.
struct DistributionStats {
  std::string layer_id;
  Target target = Target::Weights;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  int suggested_il = 0;
  int suggested_fl = 0;
  int64_t sample_count = 0;

  double max_abs() const { return std::max(std::abs(min), std::abs(max)); }
};

// One record per weighted layer, over all of the layer's weight tensors
// (kernel+bias, or BN's scale/shift/mean/var) as a single group.
std::vector<DistributionStats> analyze_weights(const Network& net, int bw = 16,
                                               int fl_cap = 20);

// One record per fusion-group head, accumulated at the group's handoff
// output over the whole calibration batch.
std::vector<DistributionStats> analyze_activations(const Network& net,
                                                   const std::vector<Tensor>& calib,
                                                   int bw = 16, int fl_cap = 20,
                                                   int jobs = 1);

const DistributionStats* find_stats(const std::vector<DistributionStats>& stats,
                                    const std::string& layer_id, Target target);

}  // namespace lpq
