// Configuration file, exploration report, selection output, human tables.

#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lpq/io.hpp"

namespace lpq::io {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error::io("cannot open '" + tmp + "' for writing");
    f << text;
    if (!f) throw Error::io("short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error::io("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

json parse_text(const std::string& text, const std::string& ctx) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error::schema(ctx + ": " + e.what());
  }
}

void check_keys(const json& j, const std::string& ctx,
                const std::set<std::string>& required,
                const std::set<std::string>& optional = {}) {
  if (!j.is_object()) throw Error::schema(ctx + ": expected an object");
  for (const auto& key : required)
    if (!j.contains(key)) throw Error::schema(ctx + ": missing field '" + key + "'");
  for (const auto& [key, value] : j.items())
    if (!required.count(key) && !optional.count(key))
      throw Error::schema(ctx + ": unknown field '" + key + "'");
}

int64_t get_i64(const json& j, const std::string& ctx, const std::string& key,
                int64_t lo, int64_t hi) {
  const json& v = j.at(key);
  if (!v.is_number_integer())
    throw Error::schema(ctx + ": field '" + key + "' must be an integer");
  const int64_t x = v.get<int64_t>();
  if (x < lo || x > hi)
    throw Error::schema(ctx + ": field '" + key + "' out of range [" +
                        std::to_string(lo) + "," + std::to_string(hi) + "]");
  return x;
}

int get_int(const json& j, const std::string& ctx, const std::string& key,
            int64_t lo, int64_t hi) {
  return static_cast<int>(get_i64(j, ctx, key, lo, hi));
}

double get_number(const json& j, const std::string& ctx, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw Error::schema(ctx + ": field '" + key + "' must be a number");
  return v.get<double>();
}

std::string get_string(const json& j, const std::string& ctx, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_string()) throw Error::schema(ctx + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

Target get_target(const json& j, const std::string& ctx) {
  const auto t = target_from_name(get_string(j, ctx, "target"));
  if (!t) throw Error::schema(ctx + ": bad target");
  return *t;
}

Technique get_technique(const json& j, const std::string& ctx) {
  const auto t = technique_from_name(get_string(j, ctx, "technique"));
  if (!t) throw Error::schema(ctx + ": bad technique");
  return *t;
}

std::vector<int> get_bits(const json& j, const std::string& ctx, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.empty())
    throw Error::schema(ctx + ": field '" + key + "' must be a nonempty array");
  std::vector<int> bits;
  for (const json& e : v) {
    if (!e.is_number_integer() || e.get<int64_t>() < 1 || e.get<int64_t>() > 32)
      throw Error::schema(ctx + ": bit widths must be integers in 1..32");
    bits.push_back(static_cast<int>(e.get<int64_t>()));
  }
  return bits;
}

std::vector<Technique> get_techniques(const json& j, const std::string& ctx,
                                      const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.empty())
    throw Error::schema(ctx + ": field '" + key + "' must be a nonempty array");
  std::vector<Technique> out;
  for (const json& e : v) {
    if (!e.is_string()) throw Error::schema(ctx + ": techniques must be strings");
    const auto t = technique_from_name(e.get<std::string>());
    if (!t) throw Error::schema(ctx + ": unknown technique '" + e.get<std::string>() + "'");
    out.push_back(*t);
  }
  return out;
}

// ---- scheme entries ----------------------------------------------------------

json scheme_to_json(const std::string& layer_id, const QuantScheme& s) {
  json j;
  j["layer"] = layer_id;
  j["target"] = target_name(s.target);
  j["technique"] = technique_name(s.technique);
  j["bw"] = s.bw;
  if (s.is_kmeans()) {
    const KMeansTable& t = *s.table;
    j["dist"] = kmeans_kind_name(t.kind);
    j["range_lo"] = t.lo;
    j["range_hi"] = t.hi;
    j["table_bw"] = t.table_params.bw;
    j["table_il"] = t.table_params.il;
    j["table_fl"] = t.table_params.fl;
    j["centers"] = t.center_codes;
  } else {
    j["il"] = s.fixed.il;
    j["fl"] = s.fixed.fl;
  }
  return j;
}

std::pair<std::string, QuantScheme> scheme_from_json(const json& j, const std::string& ctx) {
  check_keys(j, ctx, {"layer", "target", "technique", "bw"},
             {"il", "fl", "dist", "range_lo", "range_hi", "table_bw", "table_il",
              "table_fl", "centers"});
  const std::string layer = get_string(j, ctx, "layer");
  QuantScheme s;
  s.target = get_target(j, ctx);
  s.technique = get_technique(j, ctx);
  s.bw = get_int(j, ctx, "bw", 1, 32);
  if (technique_is_kmeans(s.technique)) {
    check_keys(j, ctx,
               {"layer", "target", "technique", "bw", "dist", "range_lo", "range_hi",
                "table_bw", "table_il", "table_fl", "centers"});
    auto table = std::make_shared<KMeansTable>();
    table->bw = s.bw;
    const std::string dist = get_string(j, ctx, "dist");
    if (dist == "linear") table->kind = KMeansKind::Linear;
    else if (dist == "gaussian") table->kind = KMeansKind::Gaussian;
    else throw Error::schema(ctx + ": bad distribution kind '" + dist + "'");
    table->lo = get_number(j, ctx, "range_lo");
    table->hi = get_number(j, ctx, "range_hi");
    table->table_params.bw = get_int(j, ctx, "table_bw", 1, 32);
    table->table_params.il = get_int(j, ctx, "table_il", -64, 64);
    table->table_params.fl = get_int(j, ctx, "table_fl", 0, 32);
    const json& centers = j.at("centers");
    if (!centers.is_array() || centers.empty())
      throw Error::schema(ctx + ": centers must be a nonempty array");
    if (centers.size() != 1 && centers.size() != (size_t{1} << s.bw))
      throw Error::schema(ctx + ": centers size does not match bw");
    for (const json& c : centers) {
      if (!c.is_number_integer())
        throw Error::schema(ctx + ": centers must be integer codes");
      table->center_codes.push_back(static_cast<int32_t>(c.get<int64_t>()));
    }
    s.table = std::move(table);
  } else {
    check_keys(j, ctx, {"layer", "target", "technique", "bw", "il", "fl"});
    s.fixed.bw = s.bw;
    s.fixed.il = get_int(j, ctx, "il", -64, 64);
    s.fixed.fl = get_int(j, ctx, "fl", 0, 32);
  }
  return {layer, std::move(s)};
}

// ---- stats entries -------------------------------------------------------------

json stats_to_json(const DistributionStats& s) {
  json j;
  j["layer"] = s.layer_id;
  j["target"] = target_name(s.target);
  j["min"] = s.min;
  j["max"] = s.max;
  j["mean"] = s.mean;
  j["std"] = s.stddev;
  j["il"] = s.suggested_il;
  j["fl"] = s.suggested_fl;
  j["count"] = s.sample_count;
  return j;
}

DistributionStats stats_from_json(const json& j, const std::string& ctx) {
  check_keys(j, ctx, {"layer", "target", "min", "max", "mean", "std", "il", "fl", "count"});
  DistributionStats s;
  s.layer_id = get_string(j, ctx, "layer");
  s.target = get_target(j, ctx);
  s.min = get_number(j, ctx, "min");
  s.max = get_number(j, ctx, "max");
  s.mean = get_number(j, ctx, "mean");
  s.stddev = get_number(j, ctx, "std");
  s.suggested_il = get_int(j, ctx, "il", -64, 64);
  s.suggested_fl = get_int(j, ctx, "fl", 0, 32);
  s.sample_count = get_i64(j, ctx, "count", 1, int64_t{1} << 48);
  return s;
}

// ---- sweep spec ------------------------------------------------------------------

json sweep_to_json(const SweepSpec& s) {
  json j;
  j["mode"] = sweep_mode_name(s.mode);
  j["targets"] = target_sel_name(s.targets);
  j["layers"] = s.layers;
  j["bits"] = s.bit_widths;
  json techs = json::array();
  for (Technique t : s.techniques) techs.push_back(technique_name(t));
  j["techniques"] = std::move(techs);
  j["fl_range"] = json::array({s.fl_lo, s.fl_hi});
  return j;
}

SweepSpec sweep_from_json(const json& j, const std::string& ctx) {
  check_keys(j, ctx, {"mode", "targets", "layers", "bits", "techniques", "fl_range"});
  SweepSpec s;
  const auto mode = sweep_mode_from_name(get_string(j, ctx, "mode"));
  if (!mode) throw Error::schema(ctx + ": bad sweep mode");
  s.mode = *mode;
  const auto targets = target_sel_from_name(get_string(j, ctx, "targets"));
  if (!targets) throw Error::schema(ctx + ": bad sweep targets");
  s.targets = *targets;
  const json& layers = j.at("layers");
  if (!layers.is_array()) throw Error::schema(ctx + ": layers must be an array");
  for (const json& l : layers) {
    if (!l.is_string()) throw Error::schema(ctx + ": layer ids must be strings");
    s.layers.push_back(l.get<std::string>());
  }
  s.bit_widths = get_bits(j, ctx, "bits");
  s.techniques = get_techniques(j, ctx, "techniques");
  const json& fl = j.at("fl_range");
  if (!fl.is_array() || fl.size() != 2 || !fl[0].is_number_integer() ||
      !fl[1].is_number_integer())
    throw Error::schema(ctx + ": fl_range must be [lo, hi]");
  s.fl_lo = static_cast<int>(fl[0].get<int64_t>());
  s.fl_hi = static_cast<int>(fl[1].get<int64_t>());
  if (s.fl_lo < 0 || s.fl_hi > 32 || s.fl_lo > s.fl_hi)
    throw Error::schema(ctx + ": fl_range out of [0,32] or inverted");
  return s;
}

json metadata_to_json(const ConfigMetadata& m) {
  json j;
  j["seed"] = m.seed;
  j["batch_size"] = m.batch_size;
  j["shared_bw"] = m.shared_bw;
  j["sigma_mult"] = m.sigma_mult;
  j["fl_range"] = json::array({m.fl_lo, m.fl_hi});
  j["bits"] = m.bits;
  json techs = json::array();
  for (Technique t : m.techniques) techs.push_back(technique_name(t));
  j["techniques"] = std::move(techs);
  return j;
}

ConfigMetadata metadata_from_json(const json& j, const std::string& ctx) {
  check_keys(j, ctx, {"seed", "batch_size", "shared_bw", "sigma_mult", "fl_range",
                      "bits", "techniques"});
  ConfigMetadata m;
  m.seed = get_i64(j, ctx, "seed", INT64_MIN / 2, INT64_MAX / 2);
  m.batch_size = get_int(j, ctx, "batch_size", 1, 1 << 20);
  m.shared_bw = get_int(j, ctx, "shared_bw", 1, 32);
  m.sigma_mult = get_number(j, ctx, "sigma_mult");
  const json& fl = j.at("fl_range");
  if (!fl.is_array() || fl.size() != 2)
    throw Error::schema(ctx + ": fl_range must be [lo, hi]");
  m.fl_lo = static_cast<int>(fl[0].get<int64_t>());
  m.fl_hi = static_cast<int>(fl[1].get<int64_t>());
  if (m.fl_lo < 0 || m.fl_hi > 32 || m.fl_lo > m.fl_hi)
    throw Error::schema(ctx + ": fl_range out of [0,32] or inverted");
  m.bits = get_bits(j, ctx, "bits");
  m.techniques = get_techniques(j, ctx, "techniques");
  return m;
}

}  // namespace

std::string config_to_string(const ConfigFile& cfg) {
  json j;
  j["format"] = "lpq-config";
  j["version"] = kFormatVersion;
  j["metadata"] = metadata_to_json(cfg.metadata);
  json stats = json::array();
  for (const auto& s : cfg.stats) stats.push_back(stats_to_json(s));
  j["stats"] = std::move(stats);
  json schemes = json::array();
  for (const auto& [key, scheme] : cfg.schemes)
    schemes.push_back(scheme_to_json(key.layer_id, scheme));
  j["schemes"] = std::move(schemes);
  if (cfg.sweep) j["sweep"] = sweep_to_json(*cfg.sweep);
  return j.dump(2) + "\n";
}

ConfigFile config_from_string(const std::string& text) {
  const json j = parse_text(text, "config");
  check_keys(j, "config", {"format", "version", "metadata", "stats", "schemes"},
             {"sweep"});
  if (get_string(j, "config", "format") != "lpq-config")
    throw Error::schema("config: not an lpq-config file");
  if (get_int(j, "config", "version", 0, 1 << 20) != kFormatVersion)
    throw Error::schema("config: unsupported version");
  ConfigFile cfg;
  cfg.metadata = metadata_from_json(j.at("metadata"), "config.metadata");
  const json& stats = j.at("stats");
  if (!stats.is_array()) throw Error::schema("config.stats: expected an array");
  for (size_t i = 0; i < stats.size(); ++i)
    cfg.stats.push_back(stats_from_json(stats[i], "config.stats[" + std::to_string(i) + "]"));
  const json& schemes = j.at("schemes");
  if (!schemes.is_array()) throw Error::schema("config.schemes: expected an array");
  for (size_t i = 0; i < schemes.size(); ++i) {
    const std::string ctx = "config.schemes[" + std::to_string(i) + "]";
    auto [layer, scheme] = scheme_from_json(schemes[i], ctx);
    const FitKey key{layer, scheme.target, scheme.technique, scheme.bw};
    if (cfg.schemes.count(key)) throw Error::schema(ctx + ": duplicate scheme entry");
    cfg.schemes.emplace(key, std::move(scheme));
  }
  if (j.contains("sweep")) cfg.sweep = sweep_from_json(j.at("sweep"), "config.sweep");
  return cfg;
}

void save_config(const ConfigFile& cfg, const std::filesystem::path& path) {
  write_text_atomic(path, config_to_string(cfg));
}

ConfigFile load_config(const std::filesystem::path& path) {
  return config_from_string(read_text(path));
}

std::string report_to_string(const ExplorationReport& report) {
  json j;
  j["format"] = "lpq-report";
  j["version"] = kFormatVersion;
  json meta;
  meta["seed"] = report.seed;
  meta["batch_size"] = report.batch_size;
  j["metadata"] = std::move(meta);
  j["sweep"] = sweep_to_json(report.spec);
  json rows = json::array();
  for (const auto& row : report.rows) {
    json rj;
    rj["index"] = row.index;
    rj["scope"] = row.scope;
    rj["technique"] = technique_name(row.technique);
    rj["bw"] = row.bw;
    rj["params"] = row.params;
    rj["final_distance"] = row.result.final_distance;
    rj["weights_saving_pct"] = row.result.weights_saving_pct;
    rj["activation_saving_pct"] = row.result.activation_saving_pct;
    rj["weights_bits_base"] = row.result.weights_bits_base;
    rj["weights_bits_quant"] = row.result.weights_bits_quant;
    rj["activation_bits_base"] = row.result.activation_bits_base;
    rj["activation_bits_quant"] = row.result.activation_bits_quant;
    json per_layer;
    for (const auto& [id, d] : row.result.per_layer_distance) per_layer[id] = d;
    rj["per_layer"] = std::move(per_layer);
    json entries = json::array();
    for (const auto& [id, schemes] : row.config.entries) {
      if (schemes.weights) entries.push_back(scheme_to_json(id, *schemes.weights));
      if (schemes.activations) entries.push_back(scheme_to_json(id, *schemes.activations));
    }
    rj["config"] = std::move(entries);
    rj["provenance"] = row.config.provenance;
    rows.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows);
  json best;
  for (const auto& [bw, idx] : report.best_row_by_bw) best[std::to_string(bw)] = idx;
  j["best_per_bw"] = std::move(best);
  return j.dump(2) + "\n";
}

void save_report(const ExplorationReport& report, const std::filesystem::path& path) {
  write_text_atomic(path, report_to_string(report));
}

ExplorationReport load_report(const std::filesystem::path& path) {
  const json j = parse_text(read_text(path), path.filename().string());
  const std::string ctx = path.filename().string();
  check_keys(j, ctx, {"format", "version", "metadata", "sweep", "rows", "best_per_bw"});
  if (get_string(j, ctx, "format") != "lpq-report")
    throw Error::schema(ctx + ": not an lpq-report file");
  if (get_int(j, ctx, "version", 0, 1 << 20) != kFormatVersion)
    throw Error::schema(ctx + ": unsupported version");

  ExplorationReport report;
  const json& meta = j.at("metadata");
  check_keys(meta, ctx + ".metadata", {"seed", "batch_size"});
  report.seed = get_i64(meta, ctx, "seed", INT64_MIN / 2, INT64_MAX / 2);
  report.batch_size = get_int(meta, ctx, "batch_size", 0, 1 << 20);
  report.spec = sweep_from_json(j.at("sweep"), ctx + ".sweep");

  const json& rows = j.at("rows");
  if (!rows.is_array()) throw Error::schema(ctx + ": rows must be an array");
  for (size_t i = 0; i < rows.size(); ++i) {
    const std::string rctx = ctx + ".rows[" + std::to_string(i) + "]";
    const json& rj = rows[i];
    check_keys(rj, rctx,
               {"index", "scope", "technique", "bw", "params", "final_distance",
                "weights_saving_pct", "activation_saving_pct", "weights_bits_base",
                "weights_bits_quant", "activation_bits_base", "activation_bits_quant",
                "per_layer", "config", "provenance"});
    ReportRow row;
    row.index = get_int(rj, rctx, "index", 0, 1 << 30);
    row.scope = get_string(rj, rctx, "scope");
    row.technique = get_technique(rj, rctx);
    row.bw = get_int(rj, rctx, "bw", 1, 32);
    row.params = get_string(rj, rctx, "params");
    row.result.final_distance = get_number(rj, rctx, "final_distance");
    row.result.weights_saving_pct = get_number(rj, rctx, "weights_saving_pct");
    row.result.activation_saving_pct = get_number(rj, rctx, "activation_saving_pct");
    row.result.weights_bits_base = get_i64(rj, rctx, "weights_bits_base", 0, INT64_MAX / 2);
    row.result.weights_bits_quant = get_i64(rj, rctx, "weights_bits_quant", 0, INT64_MAX / 2);
    row.result.activation_bits_base =
        get_i64(rj, rctx, "activation_bits_base", 0, INT64_MAX / 2);
    row.result.activation_bits_quant =
        get_i64(rj, rctx, "activation_bits_quant", 0, INT64_MAX / 2);
    const json& per_layer = rj.at("per_layer");
    if (!per_layer.is_object()) throw Error::schema(rctx + ": per_layer must be an object");
    for (const auto& [id, d] : per_layer.items()) {
      if (!d.is_number()) throw Error::schema(rctx + ": per_layer distances must be numbers");
      row.result.per_layer_distance[id] = d.get<double>();
    }
    const json& entries = rj.at("config");
    if (!entries.is_array()) throw Error::schema(rctx + ": config must be an array");
    for (size_t e = 0; e < entries.size(); ++e) {
      auto [layer, scheme] =
          scheme_from_json(entries[e], rctx + ".config[" + std::to_string(e) + "]");
      auto& entry = row.config.entries[layer];
      auto& slot = scheme.target == Target::Weights ? entry.weights : entry.activations;
      if (slot) throw Error::schema(rctx + ": duplicate config entry for '" + layer + "'");
      slot = std::move(scheme);
    }
    row.config.provenance = get_string(rj, rctx, "provenance");
    report.rows.push_back(std::move(row));
  }

  const json& best = j.at("best_per_bw");
  if (!best.is_object()) throw Error::schema(ctx + ": best_per_bw must be an object");
  for (const auto& [bw, idx] : best.items()) {
    if (!idx.is_number_integer()) throw Error::schema(ctx + ": best_per_bw values must be ints");
    report.best_row_by_bw[std::stoi(bw)] = static_cast<int>(idx.get<int64_t>());
  }
  return report;
}

void write_report_table(const ExplorationReport& report, std::ostream& os,
                        const std::vector<int>* order) {
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-16s %3s %-40s %14s %9s %9s\n",
                "layer/group", "technique", "BW", "params", "L2", "W-save%", "A-save%");
  os << line;
  auto emit = [&](const ReportRow& row) {
    std::snprintf(line, sizeof line, "%-24s %-16s %3d %-40s %14.6e %9.2f %9.2f\n",
                  row.scope.c_str(), technique_name(row.technique), row.bw,
                  row.params.c_str(), row.result.final_distance,
                  row.result.weights_saving_pct, row.result.activation_saving_pct);
    os << line;
  };
  if (order) {
    for (int idx : *order) emit(report.rows[static_cast<size_t>(idx)]);
  } else {
    for (const auto& row : report.rows) emit(row);
  }
}

void write_curve(const ExplorationReport& report, const std::filesystem::path& path) {
  std::string text = "# technique bit_width final_distance scope\n";
  char line[192];
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof line, "%s %d %.17g %s\n", technique_name(row.technique),
                  row.bw, row.result.final_distance, row.scope.c_str());
    text += line;
  }
  write_text_atomic(path, text);
}

void write_stats_table(const std::vector<DistributionStats>& stats, std::ostream& os) {
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %-12s %12s %12s %12s %12s %4s %4s %10s\n",
                "layer", "target", "min", "max", "mean", "std", "IL", "FL", "count");
  os << line;
  for (const auto& s : stats) {
    std::snprintf(line, sizeof line,
                  "%-16s %-12s %12.5g %12.5g %12.5g %12.5g %4d %4d %10lld\n",
                  s.layer_id.c_str(), target_name(s.target), s.min, s.max, s.mean,
                  s.stddev, s.suggested_il, s.suggested_fl,
                  static_cast<long long>(s.sample_count));
    os << line;
  }
}

void save_selection(const NetworkQuantConfig& cfg, const ConfigMetadata& meta,
                    const std::filesystem::path& path) {
  ConfigFile file;
  file.metadata = meta;
  for (const auto& [id, schemes] : cfg.entries) {
    if (schemes.weights)
      file.schemes[{id, Target::Weights, schemes.weights->technique,
                    schemes.weights->bw}] = *schemes.weights;
    if (schemes.activations)
      file.schemes[{id, Target::Activations, schemes.activations->technique,
                    schemes.activations->bw}] = *schemes.activations;
  }
  save_config(file, path);
}

NetworkQuantConfig load_selection(const std::filesystem::path& path) {
  const ConfigFile file = load_config(path);
  NetworkQuantConfig cfg;
  cfg.provenance = "selection";
  for (const auto& [key, scheme] : file.schemes) {
    auto& entry = cfg.entries[key.layer_id];
    auto& slot = key.target == Target::Weights ? entry.weights : entry.activations;
    if (slot)
      throw Error::schema("selection has multiple schemes for layer '" + key.layer_id +
                          "' (" + target_name(key.target) + ")");
    slot = scheme;
  }
  return cfg;
}

}  // namespace lpq::io
