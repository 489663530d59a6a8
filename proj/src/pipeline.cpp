#include "lpq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lpq/kernels.hpp"
#include "lpq/util.hpp"

namespace lpq {

double l2norm_distance(const Tensor& a, const Tensor& b) {
  if (!shape_equal(a.shape(), b.shape()))
    throw Error::shape("l2norm_distance: shape mismatch " + shape_to_string(a.shape()) +
                       " vs " + shape_to_string(b.shape()));
  return std::sqrt(kernels::active().sqdiff_sum(a.data(), b.data(),
                                                static_cast<size_t>(a.numel())));
}

FloatBaseline make_baseline(const Network& net, const std::vector<Tensor>& batch,
                            int jobs) {
  return FloatBaseline{infer_float(net, batch, jobs)};
}

void memory_footprint(const Network& net, const NetworkQuantConfig& cfg,
                      ComparisonResult& out) {
  constexpr int kBaselineBw = 32;
  out.weights_bits_base = out.weights_bits_quant = 0;
  out.activation_bits_base = out.activation_bits_quant = 0;

  for (const auto& layer : net.layers) {
    if (!layer.has_weights()) continue;
    const int64_t n = layer.weight_numel();
    out.weights_bits_base += n * kBaselineBw;
    const QuantScheme* s = nullptr;
    if (auto it = cfg.entries.find(layer.id); it != cfg.entries.end())
      if (it->second.weights) s = &*it->second.weights;
    out.weights_bits_quant += s ? s->storage_bits(n) : n * kBaselineBw;
  }

  const auto shapes = propagate_shapes(net);
  for (const auto& g : fusion_groups(net)) {
    const int64_t n = shape_numel(shapes[g.last]);
    out.activation_bits_base += n * kBaselineBw;
    const QuantScheme* s = nullptr;
    if (auto it = cfg.entries.find(net.layers[g.head].id); it != cfg.entries.end())
      if (it->second.activations) s = &*it->second.activations;
    out.activation_bits_quant += s ? s->traffic_bits(n) : n * kBaselineBw;
  }

  auto pct = [](int64_t base, int64_t quant) {
    return base > 0 ? 100.0 * (1.0 - static_cast<double>(quant) / static_cast<double>(base))
                    : 0.0;
  };
  out.weights_saving_pct = pct(out.weights_bits_base, out.weights_bits_quant);
  out.activation_saving_pct = pct(out.activation_bits_base, out.activation_bits_quant);
}

ComparisonResult compare_with_baseline(const Network& net,
                                       const NetworkQuantConfig& cfg,
                                       const std::vector<Tensor>& batch,
                                       const FloatBaseline& baseline,
                                       int jobs) {
  const auto quant = infer_quantized(net, cfg, batch, jobs);
  ComparisonResult res;
  const size_t n_layers = net.layers.size();
  std::vector<double> sums(n_layers, 0.0);
  for (size_t s = 0; s < batch.size(); ++s)
    for (size_t i = 0; i < n_layers; ++i)
      sums[i] += l2norm_distance(baseline.outputs[s][i], quant[s][i]);
  for (size_t i = 0; i < n_layers; ++i)
    res.per_layer_distance[net.layers[i].id] =
        batch.empty() ? 0.0 : sums[i] / static_cast<double>(batch.size());
  res.final_distance = n_layers == 0 ? 0.0 : res.per_layer_distance[net.layers.back().id];
  memory_footprint(net, cfg, res);
  return res;
}

ComparisonResult compare(const Network& net, const NetworkQuantConfig& cfg,
                         const std::vector<Tensor>& batch, int jobs) {
  return compare_with_baseline(net, cfg, batch, make_baseline(net, batch, jobs), jobs);
}

std::vector<int> fl_grid(int natural_fl, int fl_lo, int fl_hi) {
  if (natural_fl < fl_lo) return {natural_fl};
  std::vector<int> grid;
  for (int fl = fl_lo; fl <= std::min(fl_hi, natural_fl); ++fl) grid.push_back(fl);
  return grid;
}

namespace {

int natural_fl_for(int bw, int il) { return std::max(bw - 1 - il, 0); }

struct EligibleTargets {
  std::vector<std::string> weights;      // weighted layer ids, net order
  std::vector<std::string> activations;  // fusion-group head ids, net order
  std::map<std::string, std::string> tap;  // head/layer id -> group handoff id
};

EligibleTargets eligible_targets(const Network& net) {
  EligibleTargets e;
  const auto groups = fusion_groups(net);
  const auto of = fusion_group_of(net);
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    e.tap[layer.id] = net.layers[groups[of[i]].last].id;
    if (layer.has_weights()) e.weights.push_back(layer.id);
  }
  for (const auto& g : groups) e.activations.push_back(net.layers[g.head].id);
  return e;
}

void insert_scheme(NetworkQuantConfig& cfg, const std::string& layer_id,
                   const QuantScheme& s) {
  auto& entry = cfg.entries[layer_id];
  (s.target == Target::Weights ? entry.weights : entry.activations) = s;
}

// Ideal (pre-codec) k-means range and center magnitude for a stats record.
struct KMeansRange {
  double lo, hi, max_center_abs;
};

KMeansRange kmeans_range(const DistributionStats& st, KMeansKind kind,
                         double sigma_mult, int bw) {
  KMeansRange r{};
  if (kind == KMeansKind::Linear) {
    r.lo = st.min;
    r.hi = st.max;
  } else {
    r.lo = st.mean - sigma_mult * st.stddev;
    r.hi = st.mean + sigma_mult * st.stddev;
  }
  if (!(r.hi > r.lo)) {
    r.max_center_abs = std::abs(r.lo);
    return r;
  }
  const double step = (r.hi - r.lo) / static_cast<double>(int64_t{1} << bw);
  r.max_center_abs = std::max(std::abs(r.lo + 0.5 * step), std::abs(r.hi - 0.5 * step));
  return r;
}

}  // namespace

FittedSchemes fit_layer_params(const Network& net,
                               const std::vector<DistributionStats>& weight_stats,
                               const std::vector<DistributionStats>& act_stats,
                               Technique technique, int bw,
                               const std::vector<Tensor>& batch,
                               const FitOptions& opt) {
  if (bw < 1 || bw > 32)
    throw Error::schema("bit width must be in 1..32, got " + std::to_string(bw));
  const FloatBaseline baseline = make_baseline(net, batch, opt.jobs);
  const EligibleTargets elig = eligible_targets(net);
  FittedSchemes fitted;

  auto stats_for = [&](const std::string& id, Target target) -> const DistributionStats& {
    const auto* s = find_stats(target == Target::Weights ? weight_stats : act_stats,
                               id, target);
    if (!s)
      throw Error::schema("no distribution stats for layer '" + id + "' (" +
                          target_name(target) + ")");
    return *s;
  };

  if (technique == Technique::StandardFixed) {
    // One (BW, IL, FL) triple for the whole network: IL covers every group,
    // FL grid-searched on the all-layers config by final distance.
    double max_abs = 0.0;
    for (const auto& s : weight_stats) max_abs = std::max(max_abs, s.max_abs());
    for (const auto& s : act_stats) max_abs = std::max(max_abs, s.max_abs());
    const int il = fit_il_from_max_abs(max_abs);
    const auto grid = fl_grid(natural_fl_for(bw, il), opt.fl_lo, opt.fl_hi);

    auto config_for = [&](int fl) {
      QuantScheme w{technique, Target::Weights, bw, FixedParams{bw, il, fl}, nullptr};
      QuantScheme a{technique, Target::Activations, bw, FixedParams{bw, il, fl}, nullptr};
      NetworkQuantConfig cfg;
      for (const auto& id : elig.weights) insert_scheme(cfg, id, w);
      for (const auto& id : elig.activations) insert_scheme(cfg, id, a);
      return cfg;
    };

    int best_fl = grid.front();
    double best = std::numeric_limits<double>::infinity();
    for (int fl : grid) {
      const double score =
          compare_with_baseline(net, config_for(fl), batch, baseline, opt.jobs)
              .final_distance;
      if (score <= best) {  // ties keep the larger FL
        best = score;
        best_fl = fl;
      }
    }
    for (const auto& id : elig.weights)
      fitted[{id, Target::Weights, technique, bw}] =
          QuantScheme{technique, Target::Weights, bw, FixedParams{bw, il, best_fl}, nullptr};
    for (const auto& id : elig.activations)
      fitted[{id, Target::Activations, technique, bw}] =
          QuantScheme{technique, Target::Activations, bw, FixedParams{bw, il, best_fl}, nullptr};
    return fitted;
  }

  auto fit_one = [&](const std::string& id, Target target) {
    const DistributionStats& st = stats_for(id, target);
    const std::string& tap = elig.tap.at(id);
    QuantScheme best_scheme;
    double best = std::numeric_limits<double>::infinity();

    auto consider = [&](const QuantScheme& s) {
      NetworkQuantConfig cfg;
      insert_scheme(cfg, id, s);
      const double score =
          compare_with_baseline(net, cfg, batch, baseline, opt.jobs)
              .per_layer_distance.at(tap);
      if (score <= best) {  // ties keep the larger FL (grids are ascending)
        best = score;
        best_scheme = s;
      }
    };

    if (technique == Technique::DynamicFixed) {
      const int il = fit_il_from_max_abs(st.max_abs());
      for (int fl : fl_grid(natural_fl_for(bw, il), opt.fl_lo, opt.fl_hi))
        consider(QuantScheme{technique, target, bw, FixedParams{bw, il, fl}, nullptr});
    } else {
      const KMeansKind kind = technique == Technique::KMeansLinear
                                  ? KMeansKind::Linear
                                  : KMeansKind::Gaussian;
      const KMeansRange range = kmeans_range(st, kind, opt.sigma_mult, bw);
      const int il = fit_il_from_max_abs(range.max_center_abs);
      for (int fl : fl_grid(natural_fl_for(opt.shared_bw, il), opt.fl_lo, opt.fl_hi)) {
        auto table = std::make_shared<KMeansTable>(
            build_kmeans_table(st.min, st.max, st.mean, st.stddev, bw, kind,
                               opt.sigma_mult, opt.shared_bw, fl));
        consider(QuantScheme{technique, target, bw, FixedParams{}, std::move(table)});
      }
    }
    fitted[{id, target, technique, bw}] = best_scheme;
  };

  for (const auto& id : elig.weights) fit_one(id, Target::Weights);
  for (const auto& id : elig.activations) fit_one(id, Target::Activations);
  return fitted;
}

const char* sweep_mode_name(SweepMode m) {
  switch (m) {
    case SweepMode::SingleLayer: return "single";
    case SweepMode::LayerGroup: return "group";
    case SweepMode::WholeNetwork: return "network";
  }
  return "?";
}

const char* target_sel_name(TargetSel t) {
  switch (t) {
    case TargetSel::Weights: return "weights";
    case TargetSel::Activations: return "activations";
    case TargetSel::Both: return "both";
  }
  return "?";
}

std::optional<SweepMode> sweep_mode_from_name(const std::string& s) {
  if (s == "single") return SweepMode::SingleLayer;
  if (s == "group") return SweepMode::LayerGroup;
  if (s == "network") return SweepMode::WholeNetwork;
  return std::nullopt;
}

std::optional<TargetSel> target_sel_from_name(const std::string& s) {
  if (s == "weights") return TargetSel::Weights;
  if (s == "activations") return TargetSel::Activations;
  if (s == "both") return TargetSel::Both;
  return std::nullopt;
}

namespace {

std::string row_params_summary(const NetworkQuantConfig& cfg) {
  std::string w_summary, a_summary;
  bool w_mixed = false, a_mixed = false;
  for (const auto& [id, schemes] : cfg.entries) {
    if (schemes.weights) {
      const std::string s = schemes.weights->params_summary();
      if (w_summary.empty()) w_summary = s;
      else if (w_summary != s) w_mixed = true;
    }
    if (schemes.activations) {
      const std::string s = schemes.activations->params_summary();
      if (a_summary.empty()) a_summary = s;
      else if (a_summary != s) a_mixed = true;
    }
  }
  std::string out;
  if (!w_summary.empty()) out += "w: " + (w_mixed ? std::string("per-layer") : w_summary);
  if (!a_summary.empty()) {
    if (!out.empty()) out += "; ";
    out += "a: " + (a_mixed ? std::string("per-layer") : a_summary);
  }
  return out;
}

}  // namespace

ExplorationReport explore(const Network& net, const FittedSchemes& fitted,
                          const SweepSpec& spec, const std::vector<Tensor>& batch,
                          int jobs) {
  if (spec.bit_widths.empty()) throw Error::schema("sweep needs at least one bit width");
  for (int bw : spec.bit_widths)
    if (bw < 1 || bw > 32)
      throw Error::schema("sweep bit width must be in 1..32, got " + std::to_string(bw));
  if (spec.techniques.empty()) throw Error::schema("sweep needs at least one technique");
  if (spec.mode == SweepMode::LayerGroup && spec.layers.empty())
    throw Error::schema("group sweep needs an explicit layer list");
  for (const auto& id : spec.layers)
    if (net.layer_index(id) < 0)
      throw Error::schema("sweep references unknown layer '" + id + "'");

  const EligibleTargets elig = eligible_targets(net);
  auto in_filter = [&](const std::string& id) {
    return spec.layers.empty() ||
           std::find(spec.layers.begin(), spec.layers.end(), id) != spec.layers.end();
  };
  auto lookup = [&](const std::string& id, Target target, Technique tech,
                    int bw) -> const QuantScheme& {
    const auto it = fitted.find({id, target, tech, bw});
    if (it == fitted.end())
      throw Error::schema("no fitted scheme for layer '" + id + "' (" +
                          target_name(target) + ", " + technique_name(tech) + ", bw " +
                          std::to_string(bw) + "); rerun analyze with these settings");
    return it->second;
  };

  const bool want_w = spec.targets != TargetSel::Activations;
  const bool want_a = spec.targets != TargetSel::Weights;

  // Adds every eligible target of `id` to cfg; returns false if none apply.
  auto add_layer = [&](NetworkQuantConfig& cfg, const std::string& id,
                       Technique tech, int bw) {
    bool any = false;
    if (want_w &&
        std::find(elig.weights.begin(), elig.weights.end(), id) != elig.weights.end()) {
      insert_scheme(cfg, id, lookup(id, Target::Weights, tech, bw));
      any = true;
    }
    if (want_a && std::find(elig.activations.begin(), elig.activations.end(), id) !=
                      elig.activations.end()) {
      insert_scheme(cfg, id, lookup(id, Target::Activations, tech, bw));
      any = true;
    }
    return any;
  };

  ExplorationReport report;
  report.spec = spec;
  report.batch_size = static_cast<int>(batch.size());

  // Deterministic enumeration: technique-major, then bit width, then layer.
  for (Technique tech : spec.techniques) {
    for (int bw : spec.bit_widths) {
      switch (spec.mode) {
        case SweepMode::SingleLayer: {
          for (const auto& layer : net.layers) {
            if (!in_filter(layer.id)) continue;
            NetworkQuantConfig cfg;
            cfg.provenance = "explore/single";
            if (!add_layer(cfg, layer.id, tech, bw)) continue;
            report.rows.push_back({static_cast<int>(report.rows.size()), layer.id,
                                   tech, bw, row_params_summary(cfg), std::move(cfg),
                                   {}});
          }
          break;
        }
        case SweepMode::LayerGroup: {
          NetworkQuantConfig cfg;
          cfg.provenance = "explore/group";
          bool any = false;
          std::string scope = "group[";
          for (size_t i = 0; i < spec.layers.size(); ++i) {
            if (i) scope += ',';
            scope += spec.layers[i];
            any = add_layer(cfg, spec.layers[i], tech, bw) || any;
          }
          scope += ']';
          if (!any) break;
          report.rows.push_back({static_cast<int>(report.rows.size()), scope, tech,
                                 bw, row_params_summary(cfg), std::move(cfg), {}});
          break;
        }
        case SweepMode::WholeNetwork: {
          NetworkQuantConfig cfg;
          cfg.provenance = "explore/network";
          bool any = false;
          if (want_w)
            for (const auto& id : elig.weights)
              if (in_filter(id)) {
                insert_scheme(cfg, id, lookup(id, Target::Weights, tech, bw));
                any = true;
              }
          if (want_a)
            for (const auto& id : elig.activations)
              if (in_filter(id)) {
                insert_scheme(cfg, id, lookup(id, Target::Activations, tech, bw));
                any = true;
              }
          if (!any) break;
          report.rows.push_back({static_cast<int>(report.rows.size()), "network",
                                 tech, bw, row_params_summary(cfg), std::move(cfg),
                                 {}});
          break;
        }
      }
    }
  }

  const FloatBaseline baseline = make_baseline(net, batch, jobs);
  parallel_for(report.rows.size(), jobs, [&](size_t i) {
    report.rows[i].result =
        compare_with_baseline(net, report.rows[i].config, batch, baseline, 1);
  });

  for (const auto& row : report.rows) {
    const auto it = report.best_row_by_bw.find(row.bw);
    if (it == report.best_row_by_bw.end() ||
        row.result.final_distance <
            report.rows[static_cast<size_t>(it->second)].result.final_distance)
      report.best_row_by_bw[row.bw] = row.index;
  }
  return report;
}

double combined_saving_pct(const ComparisonResult& r) {
  const int64_t base = r.weights_bits_base + r.activation_bits_base;
  const int64_t quant = r.weights_bits_quant + r.activation_bits_quant;
  return base > 0 ? 100.0 * (1.0 - static_cast<double>(quant) / static_cast<double>(base))
                  : 0.0;
}

SelectionResult select_best(const ExplorationReport& report,
                            const SelectionConstraint& constraint) {
  SelectionResult sel;
  double best_objective = 0.0;
  std::string best_key;
  for (const auto& row : report.rows) {
    const double saving = combined_saving_pct(row.result);
    const double distance = row.result.final_distance;
    bool feasible;
    double objective;  // larger is better
    if (constraint.kind == SelectionConstraint::Kind::MaxDistance) {
      feasible = distance <= constraint.value;
      objective = saving;
    } else {
      feasible = saving >= constraint.value;
      objective = -distance;
    }
    if (!feasible) continue;
    const std::string key = row.config.sort_key();
    if (!sel.feasible || objective > best_objective ||
        (objective == best_objective && key < best_key)) {
      sel.feasible = true;
      sel.row_index = row.index;
      sel.config = row.config;
      best_objective = objective;
      best_key = key;
    }
  }
  return sel;
}

}  // namespace lpq
