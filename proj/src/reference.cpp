#include "lpq/reference.hpp"

#include "lpq/util.hpp"

namespace lpq {
namespace {

Tensor random_tensor(DetRng& rng, Shape shape, float scale, bool normal) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = scale * (normal ? rng.normalish() : rng.uniform(-1.0f, 1.0f));
  return t;
}

Tensor uniform_tensor(DetRng& rng, Shape shape, float lo, float hi) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace

Network make_reference_network(uint64_t seed) {
  DetRng rng(seed);
  Network net;
  net.input_shape = {3, 16, 16};

  Layer conv1;
  conv1.id = "conv1";
  conv1.kind = LayerKind::Conv2D;
  conv1.out_channels = 8;
  conv1.kernel = 3;
  conv1.stride = 1;
  conv1.pad = 1;
  conv1.weights.emplace_back("kernel", random_tensor(rng, {8, 3, 3, 3}, 0.35f, true));
  conv1.weights.emplace_back("bias", random_tensor(rng, {8}, 0.05f, true));
  net.layers.push_back(std::move(conv1));

  Layer bn1;
  bn1.id = "bn1";
  bn1.kind = LayerKind::BatchNorm;
  bn1.epsilon = 1e-5;
  bn1.weights.emplace_back("scale", uniform_tensor(rng, {8}, 0.8f, 1.2f));
  bn1.weights.emplace_back("shift", uniform_tensor(rng, {8}, -0.3f, 0.3f));
  bn1.weights.emplace_back("mean", uniform_tensor(rng, {8}, -0.2f, 0.2f));
  bn1.weights.emplace_back("var", uniform_tensor(rng, {8}, 0.5f, 1.5f));
  net.layers.push_back(std::move(bn1));

  Layer relu1;
  relu1.id = "relu1";
  relu1.kind = LayerKind::ReLU;
  net.layers.push_back(std::move(relu1));

  Layer pool1;
  pool1.id = "pool1";
  pool1.kind = LayerKind::MaxPool2D;
  pool1.window = 2;
  pool1.stride = 2;
  net.layers.push_back(std::move(pool1));

  Layer conv2;
  conv2.id = "conv2";
  conv2.kind = LayerKind::Conv2D;
  conv2.out_channels = 16;
  conv2.kernel = 3;
  conv2.stride = 1;
  conv2.pad = 1;
  conv2.weights.emplace_back("kernel", random_tensor(rng, {16, 8, 3, 3}, 0.2f, true));
  conv2.weights.emplace_back("bias", random_tensor(rng, {16}, 0.05f, true));
  net.layers.push_back(std::move(conv2));

  Layer relu2;
  relu2.id = "relu2";
  relu2.kind = LayerKind::ReLU;
  net.layers.push_back(std::move(relu2));

  Layer fc1;
  fc1.id = "fc1";
  fc1.kind = LayerKind::FullyConnected;
  fc1.out_features = 10;
  fc1.weights.emplace_back("kernel", random_tensor(rng, {10, 1024}, 0.15f, true));
  fc1.weights.emplace_back("bias", random_tensor(rng, {10}, 0.05f, true));
  net.layers.push_back(std::move(fc1));

  Layer softmax1;
  softmax1.id = "softmax1";
  softmax1.kind = LayerKind::Softmax;
  net.layers.push_back(std::move(softmax1));

  return net;
}

std::vector<Tensor> make_calibration_batch(const Shape& input_shape, size_t count,
                                           uint64_t seed) {
  DetRng rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<Tensor> batch;
  batch.reserve(count);
  for (size_t i = 0; i < count; ++i)
    batch.push_back(uniform_tensor(rng, input_shape, -1.0f, 1.0f));
  return batch;
}

}  // namespace lpq
