#include "theta/net/tensor.hpp"

#include <algorithm>

#include "theta/core/error.hpp"

namespace theta::net {

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

template <typename T>
Tensor<T>::Tensor(std::vector<int> shape, T fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

template <typename T>
Tensor<T> Tensor<T>::uninitialized(std::vector<int> shape) {
  Tensor t;
  t.values_.resize(element_count(shape));
  t.shape_ = std::move(shape);
  return t;
}

template <typename T>
void Tensor<T>::reshape(std::vector<int> shape) {
  if (element_count(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(values_.begin(), values_.end(), v);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace theta::net
