#include "lpq/inference.hpp"

#include <cmath>
#include <limits>

#include "lpq/kernels.hpp"
#include "lpq/util.hpp"

namespace lpq {
namespace {

const Tensor& weight_of(const Layer& layer,
                        const std::vector<std::pair<std::string, Tensor>>& tensors,
                        const std::string& name) {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw Error::shape("layer '" + layer.id + "': missing weight tensor '" + name + "'");
}

Tensor forward_conv2d(const Layer& layer, const Tensor& in,
                      const std::vector<std::pair<std::string, Tensor>>& w) {
  const Shape& s = in.shape();
  const int ic = static_cast<int>(s[0]);
  const int h = static_cast<int>(s[1]);
  const int wd = static_cast<int>(s[2]);
  const int k = layer.kernel;
  const int pad = layer.pad;
  const int stride = layer.stride;
  const int ph = h + 2 * pad;
  const int pw = wd + 2 * pad;
  const int oh = (ph - k) / stride + 1;
  const int ow = (pw - k) / stride + 1;

  // Zero padding is materialized so every output runs a uniform accumulation
  // chain over the window (scalar and SIMD paths stay bit-identical).
  std::vector<float> padded(static_cast<size_t>(ic) * ph * pw, 0.0f);
  for (int c = 0; c < ic; ++c)
    for (int y = 0; y < h; ++y) {
      const float* src = in.data() + (static_cast<size_t>(c) * h + y) * wd;
      float* dst = padded.data() + (static_cast<size_t>(c) * ph + y + pad) * pw + pad;
      std::copy(src, src + wd, dst);
    }

  const Tensor& kernel = weight_of(layer, w, "kernel");
  const Tensor& bias = weight_of(layer, w, "bias");
  Tensor out(Shape{layer.out_channels, oh, ow});
  kernels::active().conv2d(padded.data(), ic, ph, pw, kernel.data(), bias.data(),
                           out.data(), layer.out_channels, oh, ow, k, k, stride);
  return out;
}

Tensor forward_batchnorm(const Layer& layer, const Tensor& in,
                         const std::vector<std::pair<std::string, Tensor>>& w) {
  const Tensor& scale = weight_of(layer, w, "scale");
  const Tensor& shift = weight_of(layer, w, "shift");
  const Tensor& mean = weight_of(layer, w, "mean");
  const Tensor& var = weight_of(layer, w, "var");
  const int64_t channels = in.shape()[0];
  const int64_t per_channel = in.numel() / channels;
  Tensor out(in.shape());
  for (int64_t c = 0; c < channels; ++c) {
    // var can pick up a small negative offset after fake-quant; clamp before
    // the sqrt so the output stays finite.
    const double v = std::max(static_cast<double>(var[c]), 0.0);
    const float a = static_cast<float>(static_cast<double>(scale[c]) /
                                       std::sqrt(v + layer.epsilon));
    const float m = mean[c];
    const float b = shift[c];
    const float* src = in.data() + c * per_channel;
    float* dst = out.data() + c * per_channel;
    for (int64_t i = 0; i < per_channel; ++i) dst[i] = (src[i] - m) * a + b;
  }
  return out;
}

Tensor forward_maxpool(const Layer& layer, const Tensor& in) {
  const Shape& s = in.shape();
  const int ch = static_cast<int>(s[0]);
  const int h = static_cast<int>(s[1]);
  const int wd = static_cast<int>(s[2]);
  const int win = layer.window;
  const int stride = layer.stride;
  const int pad = layer.pad;
  const int oh = (h + 2 * pad - win) / stride + 1;
  const int ow = (wd + 2 * pad - win) / stride + 1;
  Tensor out(Shape{ch, oh, ow});
  for (int c = 0; c < ch; ++c) {
    const float* plane = in.data() + static_cast<size_t>(c) * h * wd;
    float* oplane = out.data() + static_cast<size_t>(c) * oh * ow;
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        float m = -std::numeric_limits<float>::infinity();
        for (int ky = 0; ky < win; ++ky) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;  // padded cells are ignored
          for (int kx = 0; kx < win; ++kx) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= wd) continue;
            const float v = plane[static_cast<size_t>(iy) * wd + ix];
            if (v > m) m = v;
          }
        }
        oplane[static_cast<size_t>(oy) * ow + ox] = m;
      }
  }
  return out;
}

Tensor forward_fc(const Layer& layer, const Tensor& in,
                  const std::vector<std::pair<std::string, Tensor>>& w) {
  const Tensor& kernel = weight_of(layer, w, "kernel");
  const Tensor& bias = weight_of(layer, w, "bias");
  Tensor out(Shape{layer.out_features});
  kernels::active().fc_forward(kernel.data(), bias.data(), in.data(), out.data(),
                               static_cast<size_t>(in.numel()),
                               static_cast<size_t>(layer.out_features));
  return out;
}

Tensor forward_relu(const Tensor& in) {
  Tensor out(in.shape());
  kernels::active().relu(in.data(), out.data(), static_cast<size_t>(in.numel()));
  return out;
}

Tensor forward_softmax(const Tensor& in) {
  Tensor out(in.shape());
  double m = -std::numeric_limits<double>::infinity();
  for (int64_t i = 0; i < in.numel(); ++i)
    m = std::max(m, static_cast<double>(in[i]));
  double sum = 0.0;
  for (int64_t i = 0; i < in.numel(); ++i)
    sum += std::exp(static_cast<double>(in[i]) - m);
  for (int64_t i = 0; i < in.numel(); ++i)
    out[i] = static_cast<float>(std::exp(static_cast<double>(in[i]) - m) / sum);
  return out;
}

Tensor forward_layer(const Layer& layer, const Tensor& in,
                     const std::vector<std::pair<std::string, Tensor>>& weights) {
  switch (layer.kind) {
    case LayerKind::Conv2D: return forward_conv2d(layer, in, weights);
    case LayerKind::ReLU: return forward_relu(in);
    case LayerKind::MaxPool2D: return forward_maxpool(layer, in);
    case LayerKind::BatchNorm: return forward_batchnorm(layer, in, weights);
    case LayerKind::FullyConnected: return forward_fc(layer, in, weights);
    case LayerKind::Softmax: return forward_softmax(in);
  }
  throw Error::shape("layer '" + layer.id + "': unknown kind");
}

void check_batch(const Network& net, const std::vector<Tensor>& batch) {
  for (size_t i = 0; i < batch.size(); ++i)
    if (!shape_equal(batch[i].shape(), net.input_shape))
      throw Error::shape("sample " + std::to_string(i) + " has shape " +
                         shape_to_string(batch[i].shape()) + ", network expects " +
                         shape_to_string(net.input_shape));
}

}  // namespace

std::vector<std::vector<std::pair<std::string, Tensor>>> quantized_weights(
    const Network& net, const NetworkQuantConfig& cfg) {
  std::vector<std::vector<std::pair<std::string, Tensor>>> result;
  result.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    const QuantScheme* scheme = nullptr;
    if (auto it = cfg.entries.find(layer.id); it != cfg.entries.end())
      if (it->second.weights) scheme = &*it->second.weights;
    std::vector<std::pair<std::string, Tensor>> tensors;
    tensors.reserve(layer.weights.size());
    for (const auto& [name, t] : layer.weights)
      tensors.emplace_back(name, scheme ? apply_scheme(t, *scheme) : t);
    result.push_back(std::move(tensors));
  }
  return result;
}

std::vector<LayerOutputs> infer_float(const Network& net,
                                      const std::vector<Tensor>& batch, int jobs) {
  return infer_quantized(net, NetworkQuantConfig{}, batch, jobs);
}

std::vector<LayerOutputs> infer_quantized(const Network& net,
                                          const NetworkQuantConfig& cfg,
                                          const std::vector<Tensor>& batch,
                                          int jobs) {
  propagate_shapes(net);
  cfg.validate(net);
  check_batch(net, batch);

  const auto weights = quantized_weights(net, cfg);

  // Activation schemes apply at the fusion group's handoff layer.
  std::vector<const QuantScheme*> act_at(net.layers.size(), nullptr);
  for (const auto& g : fusion_groups(net)) {
    const auto it = cfg.entries.find(net.layers[g.head].id);
    if (it != cfg.entries.end() && it->second.activations)
      act_at[g.last] = &*it->second.activations;
  }

  std::vector<LayerOutputs> results(batch.size());
  parallel_for(batch.size(), jobs, [&](size_t s) {
    LayerOutputs outs;
    outs.reserve(net.layers.size());  // keeps back() references stable
    const Tensor* cur = &batch[s];
    for (size_t i = 0; i < net.layers.size(); ++i) {
      Tensor out = forward_layer(net.layers[i], *cur, weights[i]);
      if (act_at[i]) out = apply_scheme(out, *act_at[i]);
      outs.push_back(std::move(out));
      cur = &outs.back();
    }
    results[s] = std::move(outs);
  });
  return results;
}

}  // namespace lpq
