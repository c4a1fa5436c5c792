#include "nnma/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nnma/init.hpp"

namespace nnma {

AttentionLevelParams AttentionLevelParams::zeros(std::size_t d, std::size_t d_m,
                                                 bool first_level) {
  const std::size_t m_in = first_level ? 6 * d : 6 * d + d_m;
  auto arg = [&] {
    return ArgAttentionParams{Tensor::zeros(2 * d, 2 * d, true), Tensor::zeros(2 * d, d_m, true),
                              Tensor::zeros(1, 2 * d, true)};
  };
  return {Tensor::zeros(d_m, m_in, true), arg(), arg()};
}

AttentionLevelParams AttentionLevelParams::xavier(std::size_t d, std::size_t d_m,
                                                  bool first_level, Rng& rng) {
  const std::size_t m_in = first_level ? 6 * d : 6 * d + d_m;
  AttentionLevelParams p;
  p.W_m = xavier_uniform(d_m, m_in, rng);
  for (ArgAttentionParams* arg : {&p.arg1, &p.arg2}) {
    arg->W_a = xavier_uniform(2 * d, 2 * d, rng);
    arg->W_b = xavier_uniform(2 * d, d_m, rng);
    arg->W_s = xavier_uniform(1, 2 * d, rng);
  }
  return p;
}

std::vector<Tensor> AttentionLevelParams::parameters() const {
  return {W_m, arg1.W_a, arg1.W_b, arg1.W_s, arg2.W_a, arg2.W_b, arg2.W_s};
}

GeneralRepr general_repr(const Tensor& h1, const Tensor& h2) {
  if (h1.cols() == 0 || h2.cols() == 0)
    throw ShapeError("general_repr: empty argument encoding");
  return {mean_cols(h1), mean_cols(h2)};
}

Tensor memory_first(const GeneralRepr& g, const AttentionLevelParams& p) {
  const std::size_t expected = 3 * g.R0_1.rows();
  if (p.W_m.cols() != expected)
    throw ShapeError("memory_first: W_m is " + to_string(p.W_m.shape()) +
                     " but the level-1 input has " + std::to_string(expected) + " rows");
  return tanh(matmul(p.W_m, concat({g.R0_1, g.R0_2, sub(g.R0_1, g.R0_2)})));
}

Tensor memory_next(const Tensor& R1_prev, const Tensor& R2_prev, const Tensor& M_prev,
                   const AttentionLevelParams& p) {
  const std::size_t expected = 3 * R1_prev.rows() + M_prev.rows();
  if (p.W_m.cols() != expected)
    throw ShapeError("memory_next: W_m is " + to_string(p.W_m.shape()) +
                     " but the level-k input has " + std::to_string(expected) + " rows");
  return tanh(matmul(p.W_m, concat({R1_prev, R2_prev, sub(R1_prev, R2_prev), M_prev})));
}

AttendResult attend(const Tensor& h, const Tensor& M, const ArgAttentionParams& p) {
  const std::size_t L = h.cols();
  if (L == 0) throw ShapeError("attend: empty argument encoding");
  const Tensor o = tanh(add(matmul(p.W_a, h), matmul(p.W_b, broadcast_repeat(M, L))));
  Tensor a = softmax(transpose(matmul(p.W_s, o)));
  Tensor R = matmul(h, a);
  return {std::move(a), std::move(R)};
}

LevelOutput run_level(const Tensor& h1, const Tensor& h2, const GeneralRepr& general,
                      const LevelOutput* prev, const AttentionLevelParams& p) {
  Tensor M = prev ? memory_next(prev->R1, prev->R2, prev->M, p) : memory_first(general, p);
  auto [a1, R1] = attend(h1, M, p.arg1);
  auto [a2, R2] = attend(h2, M, p.arg2);
  return {std::move(M), std::move(a1), std::move(a2), std::move(R1), std::move(R2)};
}

StackOutput run_stack(const Tensor& h1, const Tensor& h2,
                      const std::vector<AttentionLevelParams>& params) {
  if (params.empty()) throw std::invalid_argument("run_stack: at least one attention level required");
  StackOutput out;
  out.general = general_repr(h1, h2);
  out.levels.reserve(params.size());
  for (const auto& level : params) {
    const LevelOutput* prev = out.levels.empty() ? nullptr : &out.levels.back();
    out.levels.push_back(run_level(h1, h2, out.general, prev, level));
  }
  return out;
}

}  // namespace nnma
