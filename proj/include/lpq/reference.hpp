#pragma once

#include <cstdint>
#include <vector>

#include "lpq/net.hpp"

namespace lpq {

// Desk-scale 8-layer conv net with deterministic fixed-seed weights:
// conv1(3->8,3x3,p1) / bn1 / relu1 / pool1(2,2) / conv2(8->16,3x3,p1) /
// relu2 / fc1(1024->10) / softmax1, input [3,16,16].
Network make_reference_network(uint64_t seed = 7);

// Uniform [-1, 1) samples matching the network's input shape.
std::vector<Tensor> make_calibration_batch(const Shape& input_shape,
                                           size_t count, uint64_t seed = 7);

}  // namespace lpq
