#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lpq/tensor.hpp"

namespace lpq {

enum class LayerKind { Conv2D, ReLU, MaxPool2D, BatchNorm, FullyConnected, Softmax };

const char* layer_kind_name(LayerKind kind);
std::optional<LayerKind> layer_kind_from_name(const std::string& name);

// One node of the chain. Hyperparameters are kind-specific; unused fields
// stay at their defaults. Weight tensors are stored by fixed per-kind names:
//   conv2d / fully_connected : kernel, bias
//   batchnorm                : scale, shift, mean, var
struct Layer {
  std::string id;
  LayerKind kind = LayerKind::ReLU;

  int out_channels = 0;  // conv2d
  int kernel = 0;        // conv2d (square)
  int stride = 1;        // conv2d / maxpool2d
  int pad = 0;           // conv2d / maxpool2d (zero padding; pooling ignores pad cells)
  int window = 0;        // maxpool2d
  double epsilon = 1e-5; // batchnorm
  int out_features = 0;  // fully_connected

  std::vector<std::pair<std::string, Tensor>> weights;  // ordered

  bool has_weights() const noexcept { return !weights.empty(); }
  const Tensor* find_weight(const std::string& name) const;
  int64_t weight_numel() const;  // total elements across all weight tensors
};

// Expected weight tensor names for a layer kind, in container order.
std::vector<std::string> expected_weight_names(LayerKind kind);

// Ordered chain of layers with a declared input shape. Immutable once built.
struct Network {
  Shape input_shape;
  std::vector<Layer> layers;

  const Layer* find_layer(const std::string& id) const;
  int layer_index(const std::string& id) const;  // -1 if absent
};

// Output shape of every layer in order, or throws Error::shape naming the
// first inconsistent layer. Also validates weight-tensor shapes against the
// hyperparameters and checks id uniqueness.
std::vector<Shape> propagate_shapes(const Network& net);

// Activation fusion: a run of BatchNorm/ReLU layers immediately following a
// layer is accounted with that layer (one activation tensor per group).
// Activation quantization configured on the head applies after the last
// member; activation stats are recorded there too.
struct FusionGroup {
  size_t head = 0;  // layer index owning the group's activation scheme
  size_t last = 0;  // layer index whose output is the group's handoff tensor
};

std::vector<FusionGroup> fusion_groups(const Network& net);

// Per-layer group membership: group_of[i] = index into fusion_groups(net).
std::vector<size_t> fusion_group_of(const Network& net);

}  // namespace lpq
