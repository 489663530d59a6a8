#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lpq/analysis.hpp"
#include "lpq/inference.hpp"
#include "lpq/net.hpp"
#include "lpq/quant.hpp"

namespace lpq {

// Eq. 1: Frobenius-norm distance between two equal-shape tensors. Batch
// averaging is the caller's job.
double l2norm_distance(const Tensor& a, const Tensor& b);

struct ComparisonResult {
  std::map<std::string, double> per_layer_distance;  // averaged over batch
  double final_distance = 0.0;                       // last layer
  double weights_saving_pct = 0.0;
  double activation_saving_pct = 0.0;
  int64_t weights_bits_base = 0;
  int64_t weights_bits_quant = 0;
  int64_t activation_bits_base = 0;   // per-sample traffic, group handoffs
  int64_t activation_bits_quant = 0;
};

// Float baseline cached across the many compare() calls of a sweep.
struct FloatBaseline {
  std::vector<LayerOutputs> outputs;
};
FloatBaseline make_baseline(const Network& net, const std::vector<Tensor>& batch,
                            int jobs = 1);

ComparisonResult compare(const Network& net, const NetworkQuantConfig& cfg,
                         const std::vector<Tensor>& batch, int jobs = 1);
ComparisonResult compare_with_baseline(const Network& net,
                                       const NetworkQuantConfig& cfg,
                                       const std::vector<Tensor>& batch,
                                       const FloatBaseline& baseline,
                                       int jobs = 1);

// Memory accounting for a config (32-bit baseline for everything untouched).
void memory_footprint(const Network& net, const NetworkQuantConfig& cfg,
                      ComparisonResult& out);

struct FitKey {
  std::string layer_id;
  Target target = Target::Weights;
  Technique technique = Technique::DynamicFixed;
  int bw = 0;
  auto operator<=>(const FitKey&) const = default;
};

// Phase-1 result: fitted scheme per (layer, target, technique, bw).
using FittedSchemes = std::map<FitKey, QuantScheme>;

struct FitOptions {
  int fl_lo = 8;
  int fl_hi = 20;
  int shared_bw = 16;      // k-means table entry width
  double sigma_mult = 3.0; // Gaussian range = mean +/- sigma_mult * std
  int jobs = 1;
};

// Grid search realizing Y(V): one layer-target quantized at a time, FL (or
// the k-means table FL) swept over the grid, scored by the Eq. 1 distance at
// the target's fusion-group handoff; ties prefer the larger FL. StandardFixed
// fits one global triple scored by final distance on the whole-network
// config.
FittedSchemes fit_layer_params(const Network& net,
                               const std::vector<DistributionStats>& weight_stats,
                               const std::vector<DistributionStats>& act_stats,
                               Technique technique, int bw,
                               const std::vector<Tensor>& batch,
                               const FitOptions& opt = {});

// The FL grid actually searched for a given natural FL (bw - 1 - il clamped
// at 0): [fl_lo, min(fl_hi, natural)], or {natural} when natural < fl_lo.
std::vector<int> fl_grid(int natural_fl, int fl_lo, int fl_hi);

enum class SweepMode { SingleLayer, LayerGroup, WholeNetwork };
enum class TargetSel { Weights, Activations, Both };
const char* sweep_mode_name(SweepMode m);
const char* target_sel_name(TargetSel t);
std::optional<SweepMode> sweep_mode_from_name(const std::string& s);
std::optional<TargetSel> target_sel_from_name(const std::string& s);

struct SweepSpec {
  SweepMode mode = SweepMode::SingleLayer;
  TargetSel targets = TargetSel::Both;
  std::vector<std::string> layers;  // empty = all eligible (SingleLayer);
                                    // required for LayerGroup
  std::vector<int> bit_widths;
  std::vector<Technique> techniques;
  int fl_lo = 8;
  int fl_hi = 20;
};

struct ReportRow {
  int index = 0;
  std::string scope;  // layer id, "group[a,b]", or "network"
  Technique technique = Technique::DynamicFixed;
  int bw = 0;
  std::string params;  // per-target FL/IL or K summary
  NetworkQuantConfig config;
  ComparisonResult result;
};

struct ExplorationReport {
  SweepSpec spec;
  std::vector<ReportRow> rows;          // exact enumeration order
  std::map<int, int> best_row_by_bw;    // bw -> row index minimizing final distance
  int64_t seed = 0;
  int batch_size = 0;
};

// Phase-2 enumeration: every configuration of the sweep, compared against the
// float baseline, in deterministic order.
ExplorationReport explore(const Network& net, const FittedSchemes& fitted,
                          const SweepSpec& spec, const std::vector<Tensor>& batch,
                          int jobs = 1);

struct SelectionConstraint {
  enum class Kind { MaxDistance, MinSaving };
  Kind kind = Kind::MaxDistance;
  double value = 0.0;
};

struct SelectionResult {
  bool feasible = false;
  int row_index = -1;
  NetworkQuantConfig config;
};

// Best row under the constraint: max combined saving subject to a distance
// bound, or min distance subject to a combined-saving floor. Deterministic
// tie-break on the config sort key (layer id, then smaller bit width).
SelectionResult select_best(const ExplorationReport& report,
                            const SelectionConstraint& constraint);

double combined_saving_pct(const ComparisonResult& r);

}  // namespace lpq
