#pragma once

#include <functional>
#include <span>
#include <stdexcept>

#include "nnma/tensor.hpp"

namespace nnma {

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GradCheckOptions {
  double step = 1e-4;
  // Denominator floor so entries whose true gradient is ~0 are compared in
  // absolute terms: err = |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double floor = 1e-6;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_entry = 0;
  std::size_t entries_checked = 0;
};

// Compares the gradient produced by one backward pass of `loss_fn` with
// central differences (f(t+h) - f(t-h)) / 2h for every entry of every tensor
// in `params`. `loss_fn` must be deterministic and return a 1x1 tensor.
// Gradients of `params` are zeroed before and left holding the analytic
// gradient afterwards.
GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                           const GradCheckOptions& options = {});

double relative_error(double analytic, double numeric, double floor);

}  // namespace nnma
