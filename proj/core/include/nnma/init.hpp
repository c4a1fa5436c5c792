#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nnma/rng.hpp"
#include "nnma/tensor.hpp"

namespace nnma {

// uniform(-r, r) with r = sqrt(6 / (rows + cols)), drawn row-major.
inline Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> w(rows * cols);
  for (double& v : w) v = rng.uniform(-r, r);
  return Tensor::from(rows, cols, std::move(w), true);
}

}  // namespace nnma
