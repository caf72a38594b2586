#pragma once

#include <cstdint>
#include <vector>

#include "theta/net/layers.hpp"

namespace theta::net {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments are kept in double regardless of parameter precision.
struct AdamState {
  AdamConfig config;
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update of every parameter from its gradient.
/// Moments are created on first use; throws ShapeError when a gradient does
/// not match its parameter or the parameter list changes size.
template <typename T>
void adam_step(const std::vector<ParamRef<T>>& params, AdamState& state);

}  // namespace theta::net
