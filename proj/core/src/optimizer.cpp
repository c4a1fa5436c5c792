#include "nnma/optimizer.hpp"

#include <stdexcept>
#include <string>

namespace nnma {

VelocityBuffers VelocityBuffers::for_parameters(std::span<const Tensor> params) {
  VelocityBuffers v;
  v.buffers.reserve(params.size());
  for (const auto& p : params) v.buffers.emplace_back(p.size(), 0.0);
  return v;
}

void sgd_momentum_step(std::span<Tensor> params, VelocityBuffers& state, double rate,
                       double momentum) {
  if (params.size() != state.buffers.size())
    throw ShapeError("sgd_momentum_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(state.buffers.size()) + " velocity buffers");
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    auto& v = state.buffers[k];
    auto g = p.grad();
    if (g.size() != v.size() || p.size() != v.size())
      throw ShapeError("sgd_momentum_step: parameter " + std::to_string(k) + " " +
                       to_string(p.shape()) + " does not match its velocity buffer of " +
                       std::to_string(v.size()) + " entries");
    auto theta = p.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = momentum * v[i] - rate * g[i];
      theta[i] += v[i];
    }
  }
}

Tensor dropout_mask(std::size_t dim, double q, Rng& rng) {
  if (!(q >= 0.0 && q < 1.0))
    throw std::invalid_argument("dropout_mask: rate must lie in [0, 1), got " + std::to_string(q));
  const double keep = 1.0 / (1.0 - q);
  std::vector<double> mask(dim);
  for (double& m : mask) m = rng.bernoulli(q) ? 0.0 : keep;
  return Tensor::vector(std::move(mask));
}

}  // namespace nnma
