#include "lpq/tensor.hpp"

#include <cmath>
#include <sstream>

namespace lpq {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t e : shape) n *= e;
  return shape.empty() ? 0 : n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

bool shape_equal(const Shape& a, const Shape& b) { return a == b; }

namespace {
void validate_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 4)
    throw Error::shape("tensor order must be 1..4, got " + shape_to_string(shape));
  for (int64_t e : shape)
    if (e <= 0)
      throw Error::shape("tensor extents must be positive, got " + shape_to_string(shape));
}
}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (shape_numel(shape_) != static_cast<int64_t>(data_.size()))
    throw Error::shape("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_to_string(shape_));
}

bool Tensor::all_finite() const noexcept {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace lpq
