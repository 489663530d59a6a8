#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lpq/errors.hpp"

namespace lpq {

// Extents of a dense tensor, outermost first. Activations are laid out
// channel-major as [channels, rows, cols].
using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);
bool shape_equal(const Shape& a, const Shape& b);

// Dense row-major array of 32-bit floats. Construction validates that the
// flat data length matches the product of the extents; tensors are treated
// as immutable once filled.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const noexcept { return shape_; }
  int64_t numel() const noexcept { return static_cast<int64_t>(data_.size()); }
  bool empty() const noexcept { return data_.empty(); }

  const float* data() const noexcept { return data_.data(); }
  float* data() noexcept { return data_.data(); }
  const std::vector<float>& values() const noexcept { return data_; }

  float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }
  float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }

  bool all_finite() const noexcept;

private:
  Shape shape_;
  std::vector<float> data_;
};

}  // namespace lpq
