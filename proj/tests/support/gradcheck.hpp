#pragma once

// Central-difference gradient checks in double precision.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "theta/core/rng.hpp"
#include "theta/net/layers.hpp"
#include "theta/net/loss.hpp"

namespace theta::testing {

struct GradCheck {
  std::size_t checked = 0;
  double max_rel_err = 0.0;
  std::size_t kinks = 0;  // coordinates skipped because a ReLU6 corner lies within the step
};

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

// Central difference of `loss` along `slot` with step h. Also reports whether
// the left and right slopes disagree, which means the step straddles a corner
// of a piecewise-linear activation; a corner at distance d < h biases the
// estimate by half that asymmetry.
template <typename Loss>
inline double central_difference(Loss& loss, double* slot, double mid, double h, bool& kink) {
  const double saved = *slot;
  *slot = saved + h;
  const double up = loss();
  *slot = saved - h;
  const double down = loss();
  *slot = saved;
  const double l = mid - down, r = up - mid;
  const double diff = std::abs(r - l);
  kink |= diff > 1e-11 && diff > 1e-3 * std::max(std::abs(l), std::abs(r));
  return (up - down) / (2 * h);
}

// Estimates at h and h/10 must agree to 1e-4 (smooth error is O(h^2)); if they
// do not, or either straddles a corner, the pair is retried 100x smaller.
// Returns false when no clean estimate was found.
template <typename Loss>
inline bool smooth_derivative(Loss& loss, double* slot, double mid, double h, double& out) {
  for (int attempt = 0; attempt < 2; ++attempt, h *= 1e-2) {
    bool kink = false;
    const double coarse = central_difference(loss, slot, mid, h, kink);
    const double fine = central_difference(loss, slot, mid, h / 10, kink);
    if (!kink && rel_err(coarse, fine) < 1e-4) {
      out = fine;
      return true;
    }
  }
  return false;
}

// Random coordinates drawn across the input and every parameter tensor,
// compared against (L(x+h) - L(x-h)) / 2h for L = sum(probe * layer(x)).
// Coordinates without a clean estimate (see smooth_derivative) are counted as
// kinks and skipped; `coords` smooth coordinates are always checked.
inline GradCheck check_layer(net::Layer<double>& layer, net::Tensor<double> x, Rng& rng, int coords = 100,
                             double h = 1e-3) {
  net::Tensor<double> y = layer.forward(x, true);
  net::Tensor<double> probe(y.shape());
  for (double& v : probe.values()) v = rng.uniform(-1.0, 1.0);
  const net::Tensor<double> dx = layer.backward(probe, true);

  std::vector<net::ParamRef<double>> params;
  layer.collect_params("", params);
  std::vector<net::Tensor<double>> grads;
  for (const auto& p : params) grads.push_back(*p.grad);

  auto loss = [&] {
    const net::Tensor<double> out = layer.forward(x, true);
    layer.release();
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += probe[i] * out[i];
    return s;
  };

  std::size_t total = x.size();
  for (const auto& p : params) total += p.value->size();

  GradCheck r;
  const double mid = loss();
  while (r.checked < static_cast<std::size_t>(coords) && r.kinks < static_cast<std::size_t>(coords)) {
    std::size_t k = rng.below(total);
    double* slot = nullptr;
    double analytic = 0.0;
    if (k < x.size()) {
      slot = &x[k];
      analytic = dx[k];
    } else {
      k -= x.size();
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (k < params[i].value->size()) {
          slot = &(*params[i].value)[k];
          analytic = grads[i][k];
          break;
        }
        k -= params[i].value->size();
      }
    }
    double numeric = 0.0;
    if (!smooth_derivative(loss, slot, mid, h, numeric)) {
      ++r.kinks;
      continue;
    }
    r.max_rel_err = std::max(r.max_rel_err, rel_err(analytic, numeric));
    ++r.checked;
  }
  return r;
}

// Softmax(T) + focal loss with respect to the logits.
inline GradCheck check_focal_head(std::size_t batch, double gamma, double temperature, Rng& rng, int coords = 100,
                                  double h = 1e-3) {
  net::Tensor<double> z({static_cast<int>(batch), static_cast<int>(kNumJoints * kNumBins)});
  for (double& v : z.values()) v = rng.uniform(-3.0, 3.0);
  std::vector<BinLabels> labels(batch);
  for (auto& l : labels)
    for (int& b : l) b = static_cast<int>(rng.below(kNumBins));
  net::ClassWeights alpha{};
  for (auto& row : alpha)
    for (double& a : row) a = rng.uniform(0.2, 2.0);

  const auto lg = net::focal_loss_with_grad(z, std::span<const BinLabels>(labels), alpha, gamma, temperature);
  auto loss = [&] {
    return net::focal_loss(net::temperature_softmax(z, temperature), std::span<const BinLabels>(labels), alpha, gamma);
  };
  GradCheck r;
  for (int c = 0; c < coords; ++c) {
    const std::size_t k = rng.below(z.size());
    const double saved = z[k];
    z[k] = saved + h;
    const double up = loss();
    z[k] = saved - h;
    const double down = loss();
    z[k] = saved;
    r.max_rel_err = std::max(r.max_rel_err, rel_err(lg.dlogits[k], (up - down) / (2 * h)));
    ++r.checked;
  }
  return r;
}

inline net::Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  net::Tensor<double> t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Values kept at least `margin` away from the ReLU6 corners at 0 and 6.
inline net::Tensor<double> kink_free_tensor(std::vector<int> shape, Rng& rng, double margin = 0.05) {
  net::Tensor<double> t(std::move(shape));
  for (double& v : t.values()) {
    do {
      v = rng.uniform(-2.0, 8.0);
    } while (std::abs(v) < margin || std::abs(v - 6.0) < margin);
  }
  return t;
}

}  // namespace theta::testing
