#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nnma/rng.hpp"
#include "nnma/tensor.hpp"

namespace nnma {

// One zero-initialized velocity buffer per parameter tensor.
struct VelocityBuffers {
  std::vector<std::vector<double>> buffers;

  static VelocityBuffers for_parameters(std::span<const Tensor> params);
  bool operator==(const VelocityBuffers&) const = default;
};

// Network parameters train at rate lambda, embeddings at lambda_e; each
// group carries its own velocities.
struct OptimizerState {
  VelocityBuffers network;
  VelocityBuffers embeddings;

  bool operator==(const OptimizerState&) const = default;
};

// Classical momentum, per entry: v <- momentum * v - rate * g; theta <- theta + v.
void sgd_momentum_step(std::span<Tensor> params, VelocityBuffers& state, double rate,
                       double momentum);

// Inverted dropout: each entry is 0 with probability q, otherwise 1/(1-q).
// Entries are drawn in order as rng.bernoulli(q).
Tensor dropout_mask(std::size_t dim, double q, Rng& rng);

}  // namespace nnma
