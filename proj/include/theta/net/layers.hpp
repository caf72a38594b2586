#pragma once

#include <memory>
#include <string>
#include <vector>

#include "theta/core/rng.hpp"
#include "theta/net/tensor.hpp"

namespace theta::net {

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
};

/// Parameter or persistent buffer (batch-norm running statistics) in
/// checkpoint order.
template <typename T>
struct StateRef {
  std::string name;
  Tensor<T>* value = nullptr;
  bool is_param = true;
};

/// A differentiable stage. forward(train = true) keeps what backward needs;
/// backward overwrites (not accumulates) parameter gradients. Calling backward
/// without a training-mode forward throws StateError.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(Tensor<T> x, bool train) = 0;
  /// Returns dL/dx, or an empty tensor when need_input_grad is false.
  virtual Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad) = 0;
  virtual void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    (void)prefix;
    (void)out;
  }
  virtual void collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) {
    (void)prefix;
    (void)out;
  }
  virtual void initialize(Rng& rng) { (void)rng; }
  /// Drops cached activations.
  virtual void release() {}
};

/// Square kernel, zero padding k/2, no bias (batch norm follows every conv).
/// 1x1 stride-1 kernels run as a plain GEMM, others through im2col.
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride);

  Tensor<T> forward(Tensor<T> x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) override;
  /// He-uniform: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
  void initialize(Rng& rng) override;
  void release() override { input_ = {}; }

  Tensor<T>& weight() { return weight_; }
  int out_size(int in) const { return (in + 2 * pad_ - kernel_) / stride_ + 1; }

 private:
  void im2col(const T* in, int h, int w, T* cols) const;
  void col2im(const T* cols, int h, int w, T* in) const;

  int cin_, cout_, kernel_, stride_, pad_;
  Tensor<T> weight_, grad_;
  Tensor<T> input_;
};

/// 3x3 per-channel convolution, padding 1.
template <typename T>
class DepthwiseConv2d final : public Layer<T> {
 public:
  DepthwiseConv2d(int channels, int stride);

  Tensor<T> forward(Tensor<T> x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) override;
  void initialize(Rng& rng) override;
  void release() override { input_ = {}; }

  Tensor<T>& weight() { return weight_; }

 private:
  int channels_, stride_;
  Tensor<T> weight_, grad_;
  Tensor<T> input_;
};

enum class Activation { none, relu6 };

/// Per-channel normalization over (batch, height, width). Training uses batch
/// statistics and updates running ones with momentum 0.1 (unbiased variance);
/// eval uses the running statistics. Per-plane sums are carried in double.
/// With Activation::relu6 the clamp is applied in the same pass, which is the
/// same function as a separate ReLU6 layer but saves a sweep over the tensor.
template <typename T>
class BatchNorm2d final : public Layer<T> {
 public:
  explicit BatchNorm2d(int channels, Activation act = Activation::none, double momentum = 0.1, double eps = 1e-5);

  Tensor<T> forward(Tensor<T> x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) override;
  void initialize(Rng& rng) override;
  void release() override { input_ = {}; }

  Tensor<T>& gamma() { return gamma_; }
  Tensor<T>& beta() { return beta_; }
  Tensor<T>& running_mean() { return running_mean_; }
  Tensor<T>& running_var() { return running_var_; }

 private:
  int channels_;
  Activation act_;
  double momentum_, eps_;
  Tensor<T> gamma_, beta_, grad_gamma_, grad_beta_;
  Tensor<T> running_mean_, running_var_;
  Tensor<T> input_;
  std::vector<double> mean_, inv_std_;
};

/// min(max(x, 0), 6); gradient 1 strictly inside (0, 6).
template <typename T>
class ReLU6 final : public Layer<T> {
 public:
  Tensor<T> forward(Tensor<T> x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad) override;
  void release() override { pass_.clear(); has_cache_ = false; }

 private:
  std::vector<unsigned char> pass_;
  bool has_cache_ = false;
};

/// (B, C, H, W) -> (B, C).
template <typename T>
class GlobalAvgPool final : public Layer<T> {
 public:
  Tensor<T> forward(Tensor<T> x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad) override;
  void release() override { in_shape_.clear(); }

 private:
  std::vector<int> in_shape_;
};

/// y = x W^T + b on (B, in) -> (B, out). Zero-initialized.
template <typename T>
class Linear final : public Layer<T> {
 public:
  Linear(int in_features, int out_features);

  Tensor<T> forward(Tensor<T> x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) override;
  void initialize(Rng& rng) override;
  void release() override { input_ = {}; }

  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }

 private:
  int in_, out_;
  Tensor<T> weight_, bias_, grad_weight_, grad_bias_;
  Tensor<T> input_;
};

template <typename T>
class Sequential final : public Layer<T> {
 public:
  void add(std::string name, std::unique_ptr<Layer<T>> layer);
  std::size_t size() const { return layers_.size(); }
  Layer<T>& at(std::size_t i) { return *layers_[i].second; }

  Tensor<T> forward(Tensor<T> x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) override;
  void initialize(Rng& rng) override;
  void release() override;

 private:
  std::vector<std::pair<std::string, std::unique_ptr<Layer<T>>>> layers_;
};

/// conv + batch norm + ReLU6 (children "conv" and "bn", the clamp fused
/// into the latter).
template <typename T>
std::unique_ptr<Sequential<T>> conv_bn_act(int in_channels, int out_channels, int kernel, int stride);
template <typename T>
std::unique_ptr<Sequential<T>> dw_bn_act(int channels, int stride);

/// Expand (1x1, skipped when t = 1) -> depthwise 3x3 -> project (1x1), each
/// followed by batch norm and ReLU6; identity shortcut iff stride 1 and
/// in_channels = out_channels.
template <typename T>
class InvertedResidual final : public Layer<T> {
 public:
  InvertedResidual(int in_channels, int expansion, int stride, int out_channels);

  bool has_shortcut() const { return shortcut_; }

  Tensor<T> forward(Tensor<T> x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy, bool need_input_grad) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override {
    body_.collect_params(prefix, out);
  }
  void collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) override {
    body_.collect_state(prefix, out);
  }
  void initialize(Rng& rng) override { body_.initialize(rng); }
  void release() override { body_.release(); }

 private:
  Sequential<T> body_;
  bool shortcut_;
};

extern template class Conv2d<float>;
extern template class Conv2d<double>;
extern template class DepthwiseConv2d<float>;
extern template class DepthwiseConv2d<double>;
extern template class BatchNorm2d<float>;
extern template class BatchNorm2d<double>;
extern template class ReLU6<float>;
extern template class ReLU6<double>;
extern template class GlobalAvgPool<float>;
extern template class GlobalAvgPool<double>;
extern template class Linear<float>;
extern template class Linear<double>;
extern template class Sequential<float>;
extern template class Sequential<double>;
extern template class InvertedResidual<float>;
extern template class InvertedResidual<double>;

}  // namespace theta::net
