#include "nnma/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace nnma {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const std::function<Tensor()>& loss_fn) {
  const double v = loss_fn().item();
  if (!std::isfinite(v)) throw NonFiniteError("grad_check: loss is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                           const GradCheckOptions& options) {
  for (auto& p : params) {
    if (!p.requires_grad())
      throw std::invalid_argument("grad_check: parameter does not require grad");
    p.zero_grad();
  }
  {
    Tensor loss = loss_fn();
    if (!std::isfinite(loss.item())) throw NonFiniteError("grad_check: loss is not finite");
    loss.backward();
  }

  GradCheckResult result;
  const double h = options.step;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double plus = evaluate(loss_fn);
      values[i] = saved - h;
      const double minus = evaluate(loss_fn);
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double err = relative_error(analytic[i], numeric, options.floor);
      ++result.entries_checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_param = pi;
        result.worst_entry = i;
      }
    }
  }
  return result;
}

}  // namespace nnma
