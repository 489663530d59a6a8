#pragma once

#include <vector>

#include "lpq/net.hpp"
#include "lpq/quant.hpp"

namespace lpq {

// Output of every layer in order, for one sample.
using LayerOutputs = std::vector<Tensor>;

// Float-32 reference execution. Deterministic and bitwise reproducible on a
// platform for a fixed kernel backend.
std::vector<LayerOutputs> infer_float(const Network& net,
                                      const std::vector<Tensor>& batch,
                                      int jobs = 1);

// Simulated quantized execution: runs in float, with weights replaced by
// quantize->dequantize(weights) once up front and fusion-group outputs
// replaced by quantize->dequantize(output) where the head carries an
// activations scheme. An empty config is bitwise identical to infer_float.
std::vector<LayerOutputs> infer_quantized(const Network& net,
                                          const NetworkQuantConfig& cfg,
                                          const std::vector<Tensor>& batch,
                                          int jobs = 1);

// The per-layer weight tensors after applying cfg's weights schemes
// (untouched layers keep their original tensors). Used by infer_quantized
// and by the bundle writer so both materialize identical values.
std::vector<std::vector<std::pair<std::string, Tensor>>> quantized_weights(
    const Network& net, const NetworkQuantConfig& cfg);

}  // namespace lpq
