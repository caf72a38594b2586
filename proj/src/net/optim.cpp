#include "theta/net/optim.hpp"

#include <cmath>

#include "theta/core/error.hpp"

namespace theta::net {

template <typename T>
void adam_step(const std::vector<ParamRef<T>>& params, AdamState& state) {
  if (state.m.empty() && state.t == 0) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value->size(), 0.0);
      state.v.emplace_back(p.value->size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("optimizer state does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (p.grad->shape() != p.value->shape() || state.m[i].size() != p.value->size()) {
      throw ShapeError(p.name + ": gradient " + shape_string(p.grad->shape()) + " vs parameter " +
                       shape_string(p.value->shape()));
    }
  }
  const auto& c = state.config;
  ++state.t;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* w = params[i].value->data();
    const T* g = params[i].grad->data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    for (std::size_t k = 0; k < params[i].value->size(); ++k) {
      const double gk = g[k];
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] = static_cast<T>(w[k] - c.lr * mhat / (std::sqrt(vhat) + c.eps));
    }
  }
}

template void adam_step<float>(const std::vector<ParamRef<float>>&, AdamState&);
template void adam_step<double>(const std::vector<ParamRef<double>>&, AdamState&);

}  // namespace theta::net
