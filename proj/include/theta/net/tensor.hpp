#pragma once

#include <cstddef>
#include <utility>
#include <memory>
#include <string>
#include <vector>

namespace theta::net {

/// Leaves trivially constructible elements uninitialized on resize, so large
/// activations that are about to be overwritten skip the zero pass.
template <typename T>
struct DefaultInitAllocator : std::allocator<T> {
  template <typename U>
  struct rebind {
    using other = DefaultInitAllocator<U>;
  };
  using std::allocator<T>::allocator;
  template <typename U>
  void construct(U* p) {
    ::new (static_cast<void*>(p)) U;
  }
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

/// Dense row-major tensor. Activations are (batch, channels, height, width);
/// features and logits are (batch, n).
template <typename T>
class Tensor {
 public:
  using Storage = std::vector<T, DefaultInitAllocator<T>>;

  Tensor() = default;
  /// Throws ShapeError on a negative dimension.
  explicit Tensor(std::vector<int> shape, T fill = T{});
  /// Contents are unspecified until written.
  static Tensor uninitialized(std::vector<int> shape);

  const std::vector<int>& shape() const { return shape_; }
  int dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  Storage& values() { return values_; }
  const Storage& values() const { return values_; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  /// Same element count, new dims. Throws ShapeError otherwise.
  void reshape(std::vector<int> shape);
  void fill(T v);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<int> shape_;
  Storage values_;
};

std::string shape_string(const std::vector<int>& shape);
std::size_t element_count(const std::vector<int>& shape);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace theta::net
