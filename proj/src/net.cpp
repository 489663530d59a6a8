#include "lpq/net.hpp"

#include <set>

namespace lpq {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::ReLU: return "relu";
    case LayerKind::MaxPool2D: return "maxpool2d";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::FullyConnected: return "fully_connected";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

std::optional<LayerKind> layer_kind_from_name(const std::string& name) {
  if (name == "conv2d") return LayerKind::Conv2D;
  if (name == "relu") return LayerKind::ReLU;
  if (name == "maxpool2d") return LayerKind::MaxPool2D;
  if (name == "batchnorm") return LayerKind::BatchNorm;
  if (name == "fully_connected") return LayerKind::FullyConnected;
  if (name == "softmax") return LayerKind::Softmax;
  return std::nullopt;
}

const Tensor* Layer::find_weight(const std::string& name) const {
  for (const auto& [n, t] : weights)
    if (n == name) return &t;
  return nullptr;
}

int64_t Layer::weight_numel() const {
  int64_t n = 0;
  for (const auto& [name, t] : weights) n += t.numel();
  return n;
}

std::vector<std::string> expected_weight_names(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D:
    case LayerKind::FullyConnected:
      return {"kernel", "bias"};
    case LayerKind::BatchNorm:
      return {"scale", "shift", "mean", "var"};
    default:
      return {};
  }
}

const Layer* Network::find_layer(const std::string& id) const {
  for (const auto& l : layers)
    if (l.id == id) return &l;
  return nullptr;
}

int Network::layer_index(const std::string& id) const {
  for (size_t i = 0; i < layers.size(); ++i)
    if (layers[i].id == id) return static_cast<int>(i);
  return -1;
}

namespace {

[[noreturn]] void fail(const Layer& layer, const std::string& what) {
  throw Error::shape("layer '" + layer.id + "': " + what);
}

void check_weight(const Layer& layer, const std::string& name, const Shape& want) {
  const Tensor* t = layer.find_weight(name);
  if (!t) fail(layer, "missing weight tensor '" + name + "'");
  if (!shape_equal(t->shape(), want))
    fail(layer, "weight '" + name + "' has shape " + shape_to_string(t->shape()) +
                ", expected " + shape_to_string(want));
}

Shape conv_like_output(const Layer& layer, const Shape& in, int window, int stride,
                       int pad, int64_t out_c) {
  if (in.size() != 3) fail(layer, "expects [channels,rows,cols] input, got " + shape_to_string(in));
  const int64_t h = in[1] + 2 * pad - window;
  const int64_t w = in[2] + 2 * pad - window;
  if (window <= 0 || stride <= 0 || pad < 0 || h < 0 || w < 0)
    fail(layer, "window " + std::to_string(window) + " exceeds padded input " +
                shape_to_string(in));
  return {out_c, h / stride + 1, w / stride + 1};
}

}  // namespace

std::vector<Shape> propagate_shapes(const Network& net) {
  std::set<std::string> seen;
  for (const auto& l : net.layers) {
    if (l.id.empty()) throw Error::shape("layer with empty id");
    if (!seen.insert(l.id).second)
      throw Error::shape("duplicate layer id '" + l.id + "'");
  }
  if (!net.layers.empty() && (net.input_shape.empty() || net.input_shape.size() > 4))
    throw Error::shape("network input shape must have order 1..4, got " +
                       shape_to_string(net.input_shape));

  std::vector<Shape> out;
  out.reserve(net.layers.size());
  Shape cur = net.input_shape;
  for (const auto& layer : net.layers) {
    switch (layer.kind) {
      case LayerKind::Conv2D: {
        if (cur.size() != 3)
          fail(layer, "expects [channels,rows,cols] input, got " + shape_to_string(cur));
        if (layer.out_channels <= 0 || layer.kernel <= 0)
          fail(layer, "conv2d needs positive out_channels and kernel");
        check_weight(layer, "kernel",
                     {layer.out_channels, cur[0], layer.kernel, layer.kernel});
        check_weight(layer, "bias", {layer.out_channels});
        cur = conv_like_output(layer, cur, layer.kernel, layer.stride, layer.pad,
                               layer.out_channels);
        break;
      }
      case LayerKind::MaxPool2D: {
        if (layer.window <= 0) fail(layer, "maxpool2d needs a positive window");
        cur = conv_like_output(layer, cur, layer.window, layer.stride, layer.pad, cur.empty() ? 0 : cur[0]);
        break;
      }
      case LayerKind::BatchNorm: {
        if (cur.empty()) fail(layer, "batchnorm needs a channel dimension");
        for (const auto& name : expected_weight_names(LayerKind::BatchNorm))
          check_weight(layer, name, {cur[0]});
        const Tensor* var = layer.find_weight("var");
        for (int64_t i = 0; i < var->numel(); ++i)
          if ((*var)[i] < 0.0f) fail(layer, "negative variance in 'var'");
        break;
      }
      case LayerKind::ReLU:
      case LayerKind::Softmax:
        break;  // shape preserved
      case LayerKind::FullyConnected: {
        if (layer.out_features <= 0) fail(layer, "fully_connected needs positive out_features");
        const int64_t in_n = shape_numel(cur);
        check_weight(layer, "kernel", {layer.out_features, in_n});
        check_weight(layer, "bias", {layer.out_features});
        cur = {layer.out_features};
        break;
      }
    }
    out.push_back(cur);
  }
  return out;
}

std::vector<FusionGroup> fusion_groups(const Network& net) {
  std::vector<FusionGroup> groups;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const LayerKind k = net.layers[i].kind;
    const bool fusable = k == LayerKind::ReLU || k == LayerKind::BatchNorm;
    if (groups.empty() || !fusable) {
      groups.push_back({i, i});
    } else {
      groups.back().last = i;
    }
  }
  return groups;
}

std::vector<size_t> fusion_group_of(const Network& net) {
  const auto groups = fusion_groups(net);
  std::vector<size_t> of(net.layers.size(), 0);
  for (size_t g = 0; g < groups.size(); ++g)
    for (size_t i = groups[g].head; i <= groups[g].last; ++i) of[i] = g;
  return of;
}

}  // namespace lpq
