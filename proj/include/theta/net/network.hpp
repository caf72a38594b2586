#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "theta/core/hand.hpp"
#include "theta/net/layers.hpp"

namespace theta::net {

inline constexpr int kLogitCount = static_cast<int>(kNumJoints * kNumBins);

struct BlockSpec {
  int expansion = 6;
  int stride = 1;
  int out_channels = 16;
  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct NetworkSpec {
  int in_channels = 9;
  int input_size = 224;
  int stem_channels = 16;
  int stem_kernel = 3;
  int stem_stride = 2;
  std::vector<BlockSpec> blocks{{6, 1, 16}, {6, 2, 24}, {6, 2, 32}, {6, 1, 32}};

  /// Throws ArgumentError on non-positive sizes or an even stem kernel.
  void validate() const;
  /// Single-line text form stored in checkpoints, e.g.
  /// "in=9;size=224;stem=16/3/2;blocks=6/1/16,6/2/24".
  std::string encode() const;
  /// Throws FormatError on malformed text.
  static NetworkSpec decode(std::string_view text);

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// stem conv -> inverted-residual blocks -> global average pool -> affine head
/// producing (B, 15 * 10) logits, read as (B, 15, 10).
template <typename T>
class Network {
 public:
  explicit Network(NetworkSpec spec = {});

  const NetworkSpec& spec() const { return spec_; }

  /// He-uniform convs, unit/zero batch norm, zero head; one seeded stream
  /// walked in stage order.
  void initialize(std::uint64_t seed);

  /// Keeps only the last k parameterized stages trainable; k < 0 trains all.
  /// Frozen stages always run in eval mode and receive no gradient.
  void set_trainable_tail(int k);
  std::size_t first_trainable() const { return first_trainable_; }
  std::size_t stage_count() const { return stages_.size(); }
  const std::string& stage_name(std::size_t i) const { return stages_[i].name; }

  /// (B, in_channels, size, size) -> (B, 150). Throws ShapeError naming the
  /// expected and received shapes.
  Tensor<T> forward(const Tensor<T>& x, bool train);
  /// Gradient of the loss with respect to the logits; fills parameter
  /// gradients of the trainable stages. Throws StateError without a preceding
  /// training-mode forward.
  Tensor<T> backward(const Tensor<T>& dlogits, bool need_input_grad = false);

  std::vector<ParamRef<T>> parameters(bool trainable_only = true);
  /// Every parameter and running statistic in checkpoint order.
  std::vector<StateRef<T>> state();
  std::size_t state_value_count();

  std::vector<Tensor<T>> snapshot();
  void restore(const std::vector<Tensor<T>>& values);

 private:
  struct Stage {
    std::string name;
    std::unique_ptr<Layer<T>> layer;
    bool has_params = true;
  };

  NetworkSpec spec_;
  std::vector<Stage> stages_;
  std::size_t first_trainable_ = 0;
  bool trained_forward_ = false;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace theta::net
