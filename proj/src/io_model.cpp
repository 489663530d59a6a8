// Network description (.json) and the weights/bundle containers built on the
// tensor container format.

#include <fstream>
#include <set>

#include <json.hpp>

#include "lpq/inference.hpp"
#include "lpq/io.hpp"

namespace lpq::io {

using nlohmann::json;

namespace {

constexpr int kDescriptionVersion = 1;

json parse_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error::io("cannot open '" + path.string() + "'");
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw Error::schema("'" + path.string() + "': " + e.what());
  }
  return j;
}

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

void require_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw Error::schema(ctx + ": expected an object");
}

// Strict field set: everything in `required` present, nothing outside
// required+optional accepted.
void check_keys(const json& j, const std::string& ctx,
                const std::set<std::string>& required,
                const std::set<std::string>& optional = {}) {
  require_object(j, ctx);
  for (const auto& key : required)
    if (!j.contains(key)) throw Error::schema(ctx + ": missing field '" + key + "'");
  for (const auto& [key, value] : j.items())
    if (!required.count(key) && !optional.count(key))
      throw Error::schema(ctx + ": unknown field '" + key + "'");
}

int get_int(const json& j, const std::string& ctx, const std::string& key,
            int64_t lo, int64_t hi) {
  const json& v = j.at(key);
  if (!v.is_number_integer())
    throw Error::schema(ctx + ": field '" + key + "' must be an integer");
  const int64_t x = v.get<int64_t>();
  if (x < lo || x > hi)
    throw Error::schema(ctx + ": field '" + key + "' out of range [" +
                        std::to_string(lo) + "," + std::to_string(hi) + "]");
  return static_cast<int>(x);
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

void check_format(const json& j, const std::string& ctx, const std::string& format) {
  if (get_string(j, ctx, "format") != format)
    throw Error::schema(ctx + ": not a " + format + " file");
  const int version = get_int(j, ctx, "version", 0, 1 << 20);
  if (version != kDescriptionVersion)
    throw Error::schema(ctx + ": unsupported " + format + " version " +
                        std::to_string(version));
}

}  // namespace

Network load_description(const std::filesystem::path& path) {
  const json j = parse_file(path);
  const std::string ctx = path.filename().string();
  check_keys(j, ctx, {"format", "version", "input_shape", "layers"});
  check_format(j, ctx, "lpq-network");

  Network net;
  const json& shape = j.at("input_shape");
  if (!shape.is_array() || shape.empty() || shape.size() > 4)
    throw Error::schema(ctx + ": input_shape must be an array of 1..4 extents");
  for (const json& e : shape) {
    if (!e.is_number_integer() || e.get<int64_t>() <= 0)
      throw Error::schema(ctx + ": input_shape extents must be positive integers");
    net.input_shape.push_back(e.get<int64_t>());
  }

  const json& layers = j.at("layers");
  if (!layers.is_array()) throw Error::schema(ctx + ": layers must be an array");
  for (const json& lj : layers) {
    require_object(lj, ctx + ": layer");
    const std::string id = lj.contains("id") && lj.at("id").is_string()
                               ? lj.at("id").get<std::string>()
                               : "";
    if (id.empty()) throw Error::schema(ctx + ": layer with missing or empty id");
    const std::string lctx = ctx + ": layer '" + id + "'";
    const std::string kind_name = get_string(lj, lctx, "kind");
    const auto kind = layer_kind_from_name(kind_name);
    if (!kind)
      throw Error::schema(lctx + ": unknown layer kind '" + kind_name + "'");

    Layer layer;
    layer.id = id;
    layer.kind = *kind;
    switch (*kind) {
      case LayerKind::Conv2D:
        check_keys(lj, lctx, {"id", "kind", "out_channels", "kernel"}, {"stride", "pad"});
        layer.out_channels = get_int(lj, lctx, "out_channels", 1, 1 << 16);
        layer.kernel = get_int(lj, lctx, "kernel", 1, 1 << 12);
        layer.stride = lj.contains("stride") ? get_int(lj, lctx, "stride", 1, 1 << 12) : 1;
        layer.pad = lj.contains("pad") ? get_int(lj, lctx, "pad", 0, 1 << 12) : 0;
        break;
      case LayerKind::MaxPool2D:
        check_keys(lj, lctx, {"id", "kind", "window"}, {"stride", "pad"});
        layer.window = get_int(lj, lctx, "window", 1, 1 << 12);
        layer.stride = lj.contains("stride") ? get_int(lj, lctx, "stride", 1, 1 << 12)
                                             : layer.window;
        layer.pad = lj.contains("pad") ? get_int(lj, lctx, "pad", 0, 1 << 12) : 0;
        if (layer.pad >= layer.window)
          throw Error::schema(lctx + ": pad must be smaller than window");
        break;
      case LayerKind::BatchNorm:
        check_keys(lj, lctx, {"id", "kind"}, {"epsilon"});
        if (lj.contains("epsilon")) {
          layer.epsilon = get_number(lj, lctx, "epsilon");
          if (!(layer.epsilon > 0.0))
            throw Error::schema(lctx + ": epsilon must be positive");
        }
        break;
      case LayerKind::FullyConnected:
        check_keys(lj, lctx, {"id", "kind", "out_features"});
        layer.out_features = get_int(lj, lctx, "out_features", 1, 1 << 24);
        break;
      case LayerKind::ReLU:
      case LayerKind::Softmax:
        check_keys(lj, lctx, {"id", "kind"});
        break;
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void save_description(const Network& net, const std::filesystem::path& path) {
  json j;
  j["format"] = "lpq-network";
  j["version"] = kDescriptionVersion;
  j["input_shape"] = net.input_shape;
  json layers = json::array();
  for (const auto& l : net.layers) {
    json lj;
    lj["id"] = l.id;
    lj["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::Conv2D:
        lj["out_channels"] = l.out_channels;
        lj["kernel"] = l.kernel;
        lj["stride"] = l.stride;
        lj["pad"] = l.pad;
        break;
      case LayerKind::MaxPool2D:
        lj["window"] = l.window;
        lj["stride"] = l.stride;
        lj["pad"] = l.pad;
        break;
      case LayerKind::BatchNorm:
        lj["epsilon"] = l.epsilon;
        break;
      case LayerKind::FullyConnected:
        lj["out_features"] = l.out_features;
        break;
      default:
        break;
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  write_text_atomic(path, j.dump(2) + "\n");
}

Network load_model(const std::filesystem::path& description,
                   const std::filesystem::path& weights) {
  Network net = load_description(description);
  const auto records = read_container(weights);

  std::set<std::string> used;
  auto find_record = [&](const std::string& name) -> const TensorRecord* {
    for (const auto& r : records)
      if (r.name == name) return &r;
    return nullptr;
  };

  for (auto& layer : net.layers) {
    for (const auto& wname : expected_weight_names(layer.kind)) {
      const std::string rec_name = layer.id + "." + wname;
      const TensorRecord* rec = find_record(rec_name);
      if (!rec)
        throw Error::shape("layer '" + layer.id + "': missing weights record '" +
                           rec_name + "'");
      layer.weights.emplace_back(wname, rec->to_tensor());
      used.insert(rec_name);
    }
  }
  for (const auto& r : records)
    if (!used.count(r.name))
      throw Error::schema("weights container has unreferenced record '" + r.name + "'");

  propagate_shapes(net);  // validates weight shapes against hyperparameters
  return net;
}

void save_weights(const Network& net, const std::filesystem::path& path) {
  std::vector<TensorRecord> records;
  for (const auto& layer : net.layers) {
    for (const auto& wname : expected_weight_names(layer.kind)) {
      const Tensor* t = layer.find_weight(wname);
      if (!t)
        throw Error::shape("layer '" + layer.id + "': missing weight tensor '" +
                           wname + "'");
      TensorRecord r;
      r.name = layer.id + "." + wname;
      r.shape = t->shape();
      r.tag = 0;
      r.floats = t->values();
      records.push_back(std::move(r));
    }
  }
  write_container(path, records);
}

void write_bundle(const Network& net, const NetworkQuantConfig& cfg,
                  const std::filesystem::path& path) {
  cfg.validate(net);
  std::vector<TensorRecord> records;
  for (const auto& layer : net.layers) {
    const QuantScheme* scheme = nullptr;
    if (auto it = cfg.entries.find(layer.id); it != cfg.entries.end())
      if (it->second.weights) scheme = &*it->second.weights;

    for (const auto& wname : expected_weight_names(layer.kind)) {
      const Tensor* t = layer.find_weight(wname);
      if (!t)
        throw Error::shape("layer '" + layer.id + "': missing weight tensor '" +
                           wname + "'");
      TensorRecord r;
      r.name = layer.id + "." + wname;
      r.shape = t->shape();
      if (!scheme) {
        r.tag = 0;
        r.floats = t->values();
      } else if (scheme->is_kmeans()) {
        const KMeansTable& table = *scheme->table;
        r.tag = 2;
        r.bw = scheme->bw;
        r.fixed = table.table_params;
        r.lo = table.lo;
        r.hi = table.hi;
        r.kind = table.kind;
        r.center_codes = table.center_codes;
        r.codes = quantize_kmeans(*t, table).indices;
      } else {
        r.tag = 1;
        r.fixed = scheme->fixed;
        r.codes.resize(static_cast<size_t>(t->numel()));
        for (int64_t i = 0; i < t->numel(); ++i)
          r.codes[static_cast<size_t>(i)] = quantize_fixed((*t)[i], scheme->fixed);
      }
      records.push_back(std::move(r));
    }
  }
  write_container(path, records);
}

}  // namespace lpq::io
