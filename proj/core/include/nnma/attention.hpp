#pragma once

#include <cstddef>
#include <vector>

#include "nnma/rng.hpp"
#include "nnma/tensor.hpp"

namespace nnma {

// Mean-pooled bi-LSTM outputs of each argument, (2d x 1) each.
struct GeneralRepr {
  Tensor R0_1;
  Tensor R0_2;
};

// Attention weights for one argument at one level.
//   W_a: (2d x 2d), W_b: (2d x d_m), W_s: (1 x 2d)
struct ArgAttentionParams {
  Tensor W_a;
  Tensor W_b;
  Tensor W_s;
};

// W_m is (d_m x 6d) at level 1 and (d_m x (6d + d_m)) at levels >= 2, since
// later levels also read the previous memory.
struct AttentionLevelParams {
  Tensor W_m;
  ArgAttentionParams arg1;
  ArgAttentionParams arg2;

  static AttentionLevelParams zeros(std::size_t d, std::size_t d_m, bool first_level);
  static AttentionLevelParams xavier(std::size_t d, std::size_t d_m, bool first_level, Rng& rng);

  std::size_t memory_dim() const { return W_m.rows(); }
  std::size_t encoding_dim() const { return arg1.W_a.rows(); }  // 2d
  bool first_level() const { return W_m.cols() == 3 * encoding_dim(); }

  // W_m, arg1.{W_a, W_b, W_s}, arg2.{W_a, W_b, W_s}
  std::vector<Tensor> parameters() const;
};

struct LevelOutput {
  Tensor M;   // (d_m x 1)
  Tensor a1;  // (L1 x 1)
  Tensor a2;  // (L2 x 1)
  Tensor R1;  // (2d x 1)
  Tensor R2;  // (2d x 1)
};

struct AttendResult {
  Tensor a;  // (L x 1) attention distribution
  Tensor R;  // (2d x 1) attention-weighted encoding
};

struct StackOutput {
  GeneralRepr general;
  std::vector<LevelOutput> levels;

  const Tensor& top_R1() const { return levels.back().R1; }
  const Tensor& top_R2() const { return levels.back().R2; }
};

GeneralRepr general_repr(const Tensor& h1, const Tensor& h2);

// M_1 = tanh(W_m [R0_1; R0_2; R0_1 - R0_2])
Tensor memory_first(const GeneralRepr& g, const AttentionLevelParams& p);

// M_k = tanh(W_m [R1; R2; R1 - R2; M_prev])
Tensor memory_next(const Tensor& R1_prev, const Tensor& R2_prev, const Tensor& M_prev,
                   const AttentionLevelParams& p);

// o = tanh(W_a h + W_b repeat(M, L)); a = softmax((W_s o)^T); R = h a.
AttendResult attend(const Tensor& h, const Tensor& M, const ArgAttentionParams& p);

// Level 1 reads the general representations, level k >= 2 reads level k-1.
StackOutput run_stack(const Tensor& h1, const Tensor& h2,
                      const std::vector<AttentionLevelParams>& params);

// One level given the previous level's outputs (or the general level when
// `prev` is null); run_stack is a fold of this.
LevelOutput run_level(const Tensor& h1, const Tensor& h2, const GeneralRepr& general,
                      const LevelOutput* prev, const AttentionLevelParams& p);

}  // namespace nnma
