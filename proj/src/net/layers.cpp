#include "theta/net/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "theta/core/error.hpp"

namespace theta::net {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using MapConstMat = Eigen::Map<const RowMat<T>>;

void expect_rank4(const std::vector<int>& shape, int channels, const char* who) {
  if (shape.size() != 4 || shape[1] != channels) {
    throw ShapeError(std::string(who) + ": expected (B, " + std::to_string(channels) + ", H, W), got " +
                     shape_string(shape));
  }
}

[[noreturn]] void no_forward(const char* who) {
  throw StateError(std::string(who) + ": backward called without a training forward pass");
}

// Vectorized sum of one plane, carried into double per plane.
template <typename T>
double plane_sum(const T* __restrict p, std::size_t n) {
  T s{};
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < n; ++i) s += p[i];
  return s;
}

template <typename T>
double plane_centered_sq(const T* __restrict p, std::size_t n, T mean) {
  T s{};
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < n; ++i) s += (p[i] - mean) * (p[i] - mean);
  return s;
}

template <typename T>
void he_uniform(Tensor<T>& w, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  for (T& v : w.values()) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

// ---- Conv2d -----------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, int kernel, int stride)
    : cin_(in_channels),
      cout_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(kernel / 2),
      weight_({out_channels, in_channels, kernel, kernel}),
      grad_({out_channels, in_channels, kernel, kernel}) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || kernel % 2 == 0 || stride <= 0) {
    throw ArgumentError("conv needs positive channels, odd kernel and positive stride");
  }
}

template <typename T>
void Conv2d<T>::im2col(const T* in, int h, int w, T* cols) const {
  const int ho = out_size(h), wo = out_size(w);
  for (int c = 0; c < cin_; ++c) {
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        T* row = cols + (static_cast<std::size_t>(c * kernel_ + ky) * kernel_ + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride_ + ky - pad_;
          T* dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, T{});
            continue;
          }
          const T* src = in + (static_cast<std::size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride_ + kx - pad_;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T{};
          }
        }
      }
    }
  }
}

template <typename T>
void Conv2d<T>::col2im(const T* cols, int h, int w, T* in) const {
  const int ho = out_size(h), wo = out_size(w);
  std::fill(in, in + static_cast<std::size_t>(cin_) * h * w, T{});
  for (int c = 0; c < cin_; ++c) {
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        const T* row = cols + (static_cast<std::size_t>(c * kernel_ + ky) * kernel_ + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride_ + ky - pad_;
          if (iy < 0 || iy >= h) continue;
          const T* src = row + static_cast<std::size_t>(oy) * wo;
          T* dst = in + (static_cast<std::size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride_ + kx - pad_;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(Tensor<T> x, bool train) {
  expect_rank4(x.shape(), cin_, "conv");
  const int b = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int ho = out_size(h), wo = out_size(w);
  auto y = Tensor<T>::uninitialized({b, cout_, ho, wo});
  const int kk = cin_ * kernel_ * kernel_;
  MapConstMat<T> wm(weight_.data(), cout_, kk);
  const std::size_t in_stride = static_cast<std::size_t>(cin_) * h * w;
  const std::size_t out_stride = static_cast<std::size_t>(cout_) * ho * wo;
  const bool direct = kernel_ == 1 && stride_ == 1;
  std::vector<T> cols(direct ? 0 : static_cast<std::size_t>(kk) * ho * wo);
  for (int n = 0; n < b; ++n) {
    MapMat<T> out(y.data() + n * out_stride, cout_, ho * wo);
    if (direct) {
      out.noalias() = wm * MapConstMat<T>(x.data() + n * in_stride, cin_, h * w);
    } else {
      im2col(x.data() + n * in_stride, h, w, cols.data());
      out.noalias() = wm * MapConstMat<T>(cols.data(), kk, ho * wo);
    }
  }
  if (train) input_ = std::move(x);
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy, bool need_input_grad) {
  if (input_.empty()) no_forward("conv");
  const int b = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
  const int ho = out_size(h), wo = out_size(w);
  if (dy.shape() != std::vector<int>{b, cout_, ho, wo}) {
    throw ShapeError("conv backward: gradient shape " + shape_string(dy.shape()));
  }
  const int kk = cin_ * kernel_ * kernel_;
  MapConstMat<T> wm(weight_.data(), cout_, kk);
  MapMat<T> gm(grad_.data(), cout_, kk);
  gm.setZero();
  const std::size_t in_stride = static_cast<std::size_t>(cin_) * h * w;
  const std::size_t out_stride = static_cast<std::size_t>(cout_) * ho * wo;
  const bool direct = kernel_ == 1 && stride_ == 1;
  std::vector<T> cols(direct ? 0 : static_cast<std::size_t>(kk) * ho * wo);
  Tensor<T> dx;
  if (need_input_grad) dx = Tensor<T>::uninitialized(input_.shape());
  for (int n = 0; n < b; ++n) {
    MapConstMat<T> g(dy.data() + n * out_stride, cout_, ho * wo);
    if (direct) {
      gm.noalias() += g * MapConstMat<T>(input_.data() + n * in_stride, cin_, h * w).transpose();
      if (need_input_grad) {
        MapMat<T>(dx.data() + n * in_stride, cin_, h * w).noalias() = wm.transpose() * g;
      }
    } else {
      im2col(input_.data() + n * in_stride, h, w, cols.data());
      MapMat<T> cm(cols.data(), kk, ho * wo);
      gm.noalias() += g * cm.transpose();
      if (need_input_grad) {
        cm.noalias() = wm.transpose() * g;
        col2im(cols.data(), h, w, dx.data() + n * in_stride);
      }
    }
  }
  input_ = {};
  return dx;
}

template <typename T>
void Conv2d<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "weight", &weight_, &grad_});
}

template <typename T>
void Conv2d<T>::collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) {
  out.push_back({prefix + "weight", &weight_, true});
}

template <typename T>
void Conv2d<T>::initialize(Rng& rng) {
  he_uniform(weight_, cin_ * kernel_ * kernel_, rng);
}

// ---- DepthwiseConv2d --------------------------------------------------------

namespace {

// Output columns ox whose tap ox * s + kx - 1 lands inside [0, w).
inline std::pair<int, int> tap_range(int kx, int stride, int w, int wo) {
  const int lo = kx == 0 ? 1 : 0;
  const int hi = w - kx < 0 ? 0 : std::min(wo, (w - kx) / stride + 1);
  return {lo, hi};
}

}  // namespace

template <typename T>
DepthwiseConv2d<T>::DepthwiseConv2d(int channels, int stride)
    : channels_(channels), stride_(stride), weight_({channels, 1, 3, 3}), grad_({channels, 1, 3, 3}) {
  if (channels <= 0 || stride <= 0) throw ArgumentError("depthwise conv needs positive channels and stride");
}

template <typename T>
Tensor<T> DepthwiseConv2d<T>::forward(Tensor<T> x, bool train) {
  expect_rank4(x.shape(), channels_, "depthwise conv");
  const int b = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int ho = (h - 1) / stride_ + 1, wo = (w - 1) / stride_ + 1;
  Tensor<T> y({b, channels_, ho, wo});
  for (int n = 0; n < b; ++n) {
    for (int c = 0; c < channels_; ++c) {
      const T* in = x.data() + (static_cast<std::size_t>(n) * channels_ + c) * h * w;
      T* out = y.data() + (static_cast<std::size_t>(n) * channels_ + c) * ho * wo;
      const T* k = weight_.data() + c * 9;
      for (int oy = 0; oy < ho; ++oy) {
        T* orow = out + static_cast<std::size_t>(oy) * wo;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * stride_ + ky - 1;
          if (iy < 0 || iy >= h) continue;
          const T* irow = in + static_cast<std::size_t>(iy) * w;
          for (int kx = 0; kx < 3; ++kx) {
            const T kv = k[ky * 3 + kx];
            const auto [lo, hi] = tap_range(kx, stride_, w, wo);
            if (stride_ == 1) {
              const T* src = irow + kx - 1;
#pragma omp simd
              for (int ox = lo; ox < hi; ++ox) orow[ox] += kv * src[ox];
            } else {
              for (int ox = lo; ox < hi; ++ox) orow[ox] += kv * irow[ox * stride_ + kx - 1];
            }
          }
        }
      }
    }
  }
  if (train) input_ = std::move(x);
  return y;
}

template <typename T>
Tensor<T> DepthwiseConv2d<T>::backward(const Tensor<T>& dy, bool need_input_grad) {
  if (input_.empty()) no_forward("depthwise conv");
  const int b = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
  const int ho = (h - 1) / stride_ + 1, wo = (w - 1) / stride_ + 1;
  if (dy.shape() != std::vector<int>{b, channels_, ho, wo}) {
    throw ShapeError("depthwise conv backward: gradient shape " + shape_string(dy.shape()));
  }
  Tensor<T> dx;
  if (need_input_grad) dx = Tensor<T>(input_.shape());
  for (int c = 0; c < channels_; ++c) {
    double acc[9] = {};
    const T* k = weight_.data() + c * 9;
    for (int n = 0; n < b; ++n) {
      const std::size_t plane = static_cast<std::size_t>(n) * channels_ + c;
      const T* in = input_.data() + plane * h * w;
      const T* g = dy.data() + plane * ho * wo;
      T* din = need_input_grad ? dx.data() + plane * h * w : nullptr;
      for (int oy = 0; oy < ho; ++oy) {
        const T* grow = g + static_cast<std::size_t>(oy) * wo;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * stride_ + ky - 1;
          if (iy < 0 || iy >= h) continue;
          const T* irow = in + static_cast<std::size_t>(iy) * w;
          T* drow = din ? din + static_cast<std::size_t>(iy) * w : nullptr;
          for (int kx = 0; kx < 3; ++kx) {
            const auto [lo, hi] = tap_range(kx, stride_, w, wo);
            const T kv = k[ky * 3 + kx];
            T partial{};
            if (stride_ == 1) {
              const T* src = irow + kx - 1;
#pragma omp simd reduction(+ : partial)
              for (int ox = lo; ox < hi; ++ox) partial += grow[ox] * src[ox];
              if (drow) {
                T* dst = drow + kx - 1;
#pragma omp simd
                for (int ox = lo; ox < hi; ++ox) dst[ox] += kv * grow[ox];
              }
            } else {
#pragma omp simd reduction(+ : partial)
              for (int ox = lo; ox < hi; ++ox) partial += grow[ox] * irow[ox * stride_ + kx - 1];
              if (drow) {
                for (int ox = lo; ox < hi; ++ox) drow[ox * stride_ + kx - 1] += kv * grow[ox];
              }
            }
            acc[ky * 3 + kx] += partial;
          }
        }
      }
    }
    for (int i = 0; i < 9; ++i) grad_[static_cast<std::size_t>(c) * 9 + i] = static_cast<T>(acc[i]);
  }
  input_ = {};
  return dx;
}

template <typename T>
void DepthwiseConv2d<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "weight", &weight_, &grad_});
}

template <typename T>
void DepthwiseConv2d<T>::collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) {
  out.push_back({prefix + "weight", &weight_, true});
}

template <typename T>
void DepthwiseConv2d<T>::initialize(Rng& rng) {
  he_uniform(weight_, 9, rng);
}

// ---- BatchNorm2d ------------------------------------------------------------

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int channels, Activation act, double momentum, double eps)
    : channels_(channels),
      act_(act),
      momentum_(momentum),
      eps_(eps),
      gamma_({channels}, T{1}),
      beta_({channels}),
      grad_gamma_({channels}),
      grad_beta_({channels}),
      running_mean_({channels}),
      running_var_({channels}, T{1}) {
  if (channels <= 0) throw ArgumentError("batch norm needs positive channels");
}

namespace {

// y = x * scale + shift, optionally clamped to [0, 6].
template <typename T>
void affine_plane(const T* __restrict src, T* __restrict dst, std::size_t n, T scale, T shift, bool clamp) {
  if (clamp) {
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) dst[i] = std::min(std::max(src[i] * scale + shift, T{}), T{6});
  } else {
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] * scale + shift;
  }
}

// Gradient through the optional clamp; z is recomputed from x.
template <bool Clamp, typename T>
inline T clamp_grad(T z, T d) {
  if constexpr (Clamp) {
    return (z > T{} && z < T{6}) ? d : T{};
  } else {
    return d;
  }
}

// Sums of dz and dz * xhat over one plane.
template <bool Clamp, typename T>
std::pair<double, double> bn_grad_sums(const T* __restrict x, const T* __restrict d, std::size_t n, T mean, T inv,
                                       T g, T be) {
  T s1{}, s2{};
#pragma omp simd reduction(+ : s1, s2)
  for (std::size_t i = 0; i < n; ++i) {
    const T xh = (x[i] - mean) * inv;
    const T dz = clamp_grad<Clamp>(g * xh + be, d[i]);
    s1 += dz;
    s2 += dz * xh;
  }
  return {s1, s2};
}

template <bool Clamp, typename T>
void bn_grad_input(const T* __restrict x, const T* __restrict d, T* __restrict out, std::size_t n, T mean, T inv, T g,
                   T be, T a, T mdz, T mdzx) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    const T xh = (x[i] - mean) * inv;
    const T dz = clamp_grad<Clamp>(g * xh + be, d[i]);
    out[i] = a * (dz - mdz - xh * mdzx);
  }
}

}  // namespace

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(Tensor<T> x, bool train) {
  expect_rank4(x.shape(), channels_, "batch norm");
  const int b = x.dim(0);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  const double count = static_cast<double>(b) * hw;
  const bool clamp = act_ == Activation::relu6;
  auto y = Tensor<T>::uninitialized(x.shape());
  auto plane = [&](int n, int c) { return (static_cast<std::size_t>(n) * channels_ + c) * hw; };
  if (!train) {
    for (int c = 0; c < channels_; ++c) {
      const double inv = 1.0 / std::sqrt(static_cast<double>(running_var_[c]) + eps_);
      const T scale = static_cast<T>(gamma_[c] * inv);
      const T shift = static_cast<T>(beta_[c] - running_mean_[c] * gamma_[c] * inv);
      for (int n = 0; n < b; ++n) affine_plane(x.data() + plane(n, c), y.data() + plane(n, c), hw, scale, shift, clamp);
    }
    return y;
  }
  if (count < 2) throw ShapeError("batch norm training needs more than one value per channel");
  mean_.assign(channels_, 0.0);
  inv_std_.assign(channels_, 0.0);
  for (int c = 0; c < channels_; ++c) {
    double sum = 0.0;
    for (int n = 0; n < b; ++n) sum += plane_sum(x.data() + plane(n, c), hw);
    const double mean = sum / count;
    double sq = 0.0;
    for (int n = 0; n < b; ++n) sq += plane_centered_sq(x.data() + plane(n, c), hw, static_cast<T>(mean));
    const double var = sq / count;
    const double inv = 1.0 / std::sqrt(var + eps_);
    mean_[c] = mean;
    inv_std_[c] = inv;
    const T scale = static_cast<T>(gamma_[c] * inv);
    const T shift = static_cast<T>(beta_[c] - mean * gamma_[c] * inv);
    for (int n = 0; n < b; ++n) affine_plane(x.data() + plane(n, c), y.data() + plane(n, c), hw, scale, shift, clamp);
    running_mean_[c] = static_cast<T>((1.0 - momentum_) * running_mean_[c] + momentum_ * mean);
    running_var_[c] =
        static_cast<T>((1.0 - momentum_) * running_var_[c] + momentum_ * var * count / (count - 1.0));
  }
  input_ = std::move(x);
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& dy, bool need_input_grad) {
  if (input_.empty()) no_forward("batch norm");
  if (dy.shape() != input_.shape()) throw ShapeError("batch norm backward: gradient shape " + shape_string(dy.shape()));
  const int b = input_.dim(0);
  const std::size_t hw = static_cast<std::size_t>(input_.dim(2)) * input_.dim(3);
  const double count = static_cast<double>(b) * hw;
  const bool clamp = act_ == Activation::relu6;
  Tensor<T> dx;
  if (need_input_grad) dx = Tensor<T>::uninitialized(dy.shape());
  for (int c = 0; c < channels_; ++c) {
    const T mean = static_cast<T>(mean_[c]), inv = static_cast<T>(inv_std_[c]);
    const T g = gamma_[c], be = beta_[c];
    // dz is dy with the clamp's gradient applied; z is recomputed from x.
    double sdz = 0.0, sdzx = 0.0;
    for (int n = 0; n < b; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * channels_ + c) * hw;
      const auto [s1, s2] = clamp ? bn_grad_sums<true>(input_.data() + off, dy.data() + off, hw, mean, inv, g, be)
                                  : bn_grad_sums<false>(input_.data() + off, dy.data() + off, hw, mean, inv, g, be);
      sdz += s1;
      sdzx += s2;
    }
    grad_gamma_[c] = static_cast<T>(sdzx);
    grad_beta_[c] = static_cast<T>(sdz);
    if (!need_input_grad) continue;
    const T a = static_cast<T>(gamma_[c] * inv_std_[c]);
    const T mdz = static_cast<T>(sdz / count);
    const T mdzx = static_cast<T>(sdzx / count);
    for (int n = 0; n < b; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * channels_ + c) * hw;
      if (clamp) {
        bn_grad_input<true>(input_.data() + off, dy.data() + off, dx.data() + off, hw, mean, inv, g, be, a, mdz, mdzx);
      } else {
        bn_grad_input<false>(input_.data() + off, dy.data() + off, dx.data() + off, hw, mean, inv, g, be, a, mdz, mdzx);
      }
    }
  }
  input_ = {};
  return dx;
}

template <typename T>
void BatchNorm2d<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "gamma", &gamma_, &grad_gamma_});
  out.push_back({prefix + "beta", &beta_, &grad_beta_});
}

template <typename T>
void BatchNorm2d<T>::collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) {
  out.push_back({prefix + "gamma", &gamma_, true});
  out.push_back({prefix + "beta", &beta_, true});
  out.push_back({prefix + "running_mean", &running_mean_, false});
  out.push_back({prefix + "running_var", &running_var_, false});
}

template <typename T>
void BatchNorm2d<T>::initialize(Rng&) {
  gamma_.fill(T{1});
  beta_.fill(T{});
  running_mean_.fill(T{});
  running_var_.fill(T{1});
}

// ---- ReLU6 ------------------------------------------------------------------

template <typename T>
Tensor<T> ReLU6<T>::forward(Tensor<T> x, bool train) {
  auto y = Tensor<T>::uninitialized(x.shape());
  const std::size_t n = x.size();
  const T* __restrict src = x.data();
  T* __restrict dst = y.data();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) dst[i] = std::min(std::max(src[i], T{}), T{6});
  if (train) {
    pass_.resize(n);
    unsigned char* __restrict m = pass_.data();
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) m[i] = src[i] > T{} && src[i] < T{6};
    has_cache_ = true;
  }
  return y;
}

template <typename T>
Tensor<T> ReLU6<T>::backward(const Tensor<T>& dy, bool need_input_grad) {
  if (!has_cache_) no_forward("relu6");
  if (dy.size() != pass_.size()) throw ShapeError("relu6 backward: gradient shape " + shape_string(dy.shape()));
  Tensor<T> dx;
  if (need_input_grad) {
    dx = Tensor<T>::uninitialized(dy.shape());
    const unsigned char* __restrict m = pass_.data();
    const T* __restrict g = dy.data();
    T* __restrict d = dx.data();
#pragma omp simd
    for (std::size_t i = 0; i < dy.size(); ++i) d[i] = m[i] ? g[i] : T{};
  }
  release();
  return dx;
}

// ---- GlobalAvgPool ----------------------------------------------------------

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(Tensor<T> x, bool train) {
  if (x.rank() != 4) throw ShapeError("pool: expected (B, C, H, W), got " + shape_string(x.shape()));
  const int b = x.dim(0), c = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  Tensor<T> y({b, c});
  for (std::size_t p = 0; p < static_cast<std::size_t>(b) * c; ++p) {
    y[p] = static_cast<T>(plane_sum(x.data() + p * hw, hw) / static_cast<double>(hw));
  }
  if (train) in_shape_ = x.shape();
  return y;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& dy, bool need_input_grad) {
  if (in_shape_.empty()) no_forward("pool");
  Tensor<T> dx;
  if (need_input_grad) {
    dx = Tensor<T>::uninitialized(in_shape_);
    const std::size_t hw = static_cast<std::size_t>(in_shape_[2]) * in_shape_[3];
    const T inv = static_cast<T>(1.0 / static_cast<double>(hw));
    for (std::size_t p = 0; p < dy.size(); ++p) {
      const T g = dy[p] * inv;
      std::fill(dx.data() + p * hw, dx.data() + (p + 1) * hw, g);
    }
  }
  in_shape_.clear();
  return dx;
}

// ---- Linear -----------------------------------------------------------------

template <typename T>
Linear<T>::Linear(int in_features, int out_features)
    : in_(in_features),
      out_(out_features),
      weight_({out_features, in_features}),
      bias_({out_features}),
      grad_weight_({out_features, in_features}),
      grad_bias_({out_features}) {
  if (in_features <= 0 || out_features <= 0) throw ArgumentError("linear layer needs positive sizes");
}

template <typename T>
Tensor<T> Linear<T>::forward(Tensor<T> x, bool train) {
  if (x.rank() != 2 || x.dim(1) != in_) {
    throw ShapeError("linear: expected (B, " + std::to_string(in_) + "), got " + shape_string(x.shape()));
  }
  const int b = x.dim(0);
  Tensor<T> y({b, out_});
  MapMat<T> ym(y.data(), b, out_);
  ym.noalias() = MapConstMat<T>(x.data(), b, in_) * MapConstMat<T>(weight_.data(), out_, in_).transpose();
  for (int n = 0; n < b; ++n)
    for (int o = 0; o < out_; ++o) ym(n, o) += bias_[o];
  if (train) input_ = std::move(x);
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& dy, bool need_input_grad) {
  if (input_.empty()) no_forward("linear");
  const int b = input_.dim(0);
  if (dy.shape() != std::vector<int>{b, out_}) throw ShapeError("linear backward: gradient shape " + shape_string(dy.shape()));
  MapConstMat<T> g(dy.data(), b, out_);
  MapMat<T>(grad_weight_.data(), out_, in_).noalias() = g.transpose() * MapConstMat<T>(input_.data(), b, in_);
  for (int o = 0; o < out_; ++o) {
    double s = 0.0;
    for (int n = 0; n < b; ++n) s += g(n, o);
    grad_bias_[o] = static_cast<T>(s);
  }
  Tensor<T> dx;
  if (need_input_grad) {
    dx = Tensor<T>({b, in_});
    MapMat<T>(dx.data(), b, in_).noalias() = g * MapConstMat<T>(weight_.data(), out_, in_);
  }
  input_ = {};
  return dx;
}

template <typename T>
void Linear<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "weight", &weight_, &grad_weight_});
  out.push_back({prefix + "bias", &bias_, &grad_bias_});
}

template <typename T>
void Linear<T>::collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) {
  out.push_back({prefix + "weight", &weight_, true});
  out.push_back({prefix + "bias", &bias_, true});
}

template <typename T>
void Linear<T>::initialize(Rng&) {
  weight_.fill(T{});
  bias_.fill(T{});
}

// ---- Sequential -------------------------------------------------------------

template <typename T>
void Sequential<T>::add(std::string name, std::unique_ptr<Layer<T>> layer) {
  layers_.emplace_back(std::move(name), std::move(layer));
}

template <typename T>
Tensor<T> Sequential<T>::forward(Tensor<T> x, bool train) {
  for (auto& entry : layers_) x = entry.second->forward(std::move(x), train);
  return x;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& dy, bool need_input_grad) {
  if (layers_.empty()) return need_input_grad ? dy : Tensor<T>{};
  const std::size_t last = layers_.size() - 1;
  Tensor<T> g = layers_[last].second->backward(dy, last > 0 || need_input_grad);
  for (std::size_t i = last; i-- > 0;) g = layers_[i].second->backward(g, i > 0 || need_input_grad);
  return g;
}

template <typename T>
void Sequential<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  for (auto& [name, layer] : layers_) layer->collect_params(prefix + name + ".", out);
}

template <typename T>
void Sequential<T>::collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) {
  for (auto& [name, layer] : layers_) layer->collect_state(prefix + name + ".", out);
}

template <typename T>
void Sequential<T>::initialize(Rng& rng) {
  for (auto& entry : layers_) entry.second->initialize(rng);
}

template <typename T>
void Sequential<T>::release() {
  for (auto& entry : layers_) entry.second->release();
}

template <typename T>
std::unique_ptr<Sequential<T>> conv_bn_act(int in_channels, int out_channels, int kernel, int stride) {
  auto s = std::make_unique<Sequential<T>>();
  s->add("conv", std::make_unique<Conv2d<T>>(in_channels, out_channels, kernel, stride));
  s->add("bn", std::make_unique<BatchNorm2d<T>>(out_channels, Activation::relu6));
  return s;
}

template <typename T>
std::unique_ptr<Sequential<T>> dw_bn_act(int channels, int stride) {
  auto s = std::make_unique<Sequential<T>>();
  s->add("conv", std::make_unique<DepthwiseConv2d<T>>(channels, stride));
  s->add("bn", std::make_unique<BatchNorm2d<T>>(channels, Activation::relu6));
  return s;
}

// ---- InvertedResidual -------------------------------------------------------

template <typename T>
InvertedResidual<T>::InvertedResidual(int in_channels, int expansion, int stride, int out_channels)
    : shortcut_(stride == 1 && in_channels == out_channels) {
  if (expansion <= 0) throw ArgumentError("expansion factor must be positive");
  const int hidden = in_channels * expansion;
  if (expansion != 1) body_.add("expand", conv_bn_act<T>(in_channels, hidden, 1, 1));
  body_.add("depthwise", dw_bn_act<T>(hidden, stride));
  body_.add("project", conv_bn_act<T>(hidden, out_channels, 1, 1));
}

template <typename T>
Tensor<T> InvertedResidual<T>::forward(Tensor<T> x, bool train) {
  if (!shortcut_) return body_.forward(std::move(x), train);
  Tensor<T> y = body_.forward(x, train);
  T* __restrict d = y.data();
  const T* __restrict s = x.data();
#pragma omp simd
  for (std::size_t i = 0; i < y.size(); ++i) d[i] += s[i];
  return y;
}

template <typename T>
Tensor<T> InvertedResidual<T>::backward(const Tensor<T>& dy, bool need_input_grad) {
  Tensor<T> dx = body_.backward(dy, need_input_grad);
  if (shortcut_ && need_input_grad) {
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
  }
  return dx;
}

template class Conv2d<float>;
template class Conv2d<double>;
template class DepthwiseConv2d<float>;
template class DepthwiseConv2d<double>;
template class BatchNorm2d<float>;
template class BatchNorm2d<double>;
template class ReLU6<float>;
template class ReLU6<double>;
template class GlobalAvgPool<float>;
template class GlobalAvgPool<double>;
template class Linear<float>;
template class Linear<double>;
template class Sequential<float>;
template class Sequential<double>;
template class InvertedResidual<float>;
template class InvertedResidual<double>;
template std::unique_ptr<Sequential<float>> conv_bn_act<float>(int, int, int, int);
template std::unique_ptr<Sequential<double>> conv_bn_act<double>(int, int, int, int);
template std::unique_ptr<Sequential<float>> dw_bn_act<float>(int, int);
template std::unique_ptr<Sequential<double>> dw_bn_act<double>(int, int);

}  // namespace theta::net
