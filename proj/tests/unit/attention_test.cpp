#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "nnma/attention.hpp"
#include "nnma/gradcheck.hpp"
#include "test_util.hpp"

namespace nnma {
namespace {

using test::random_tensor;
using test::to_vec;

void zero_attention_scores(std::vector<AttentionLevelParams>& levels) {
  for (auto& l : levels)
    for (Tensor W : {l.arg1.W_s, l.arg2.W_s})
      for (double& v : W.mutable_values()) v = 0.0;
}

std::vector<AttentionLevelParams> random_levels(std::size_t d, std::size_t d_m, std::size_t K,
                                                Rng& rng) {
  std::vector<AttentionLevelParams> out;
  for (std::size_t k = 0; k < K; ++k) out.push_back(AttentionLevelParams::xavier(d, d_m, k == 0, rng));
  return out;
}

TEST(GeneralRepr, ColumnMeans) {
  auto g = general_repr(Tensor::from(1, 2, {1, 3}), Tensor::from(1, 1, {5}));
  EXPECT_EQ(g.R0_1.item(), 2.0);
  EXPECT_EQ(g.R0_2.item(), 5.0);
  auto v = Tensor::vector({0.5, -2});
  auto same = concat_cols(std::vector<Tensor>(3, v));
  EXPECT_EQ(to_vec(general_repr(same, same).R0_1), to_vec(v));
}

TEST(GeneralRepr, BruteForceMean) {
  Rng rng(1);
  auto h = random_tensor(4, 7, rng, false);
  auto g = general_repr(h, h);
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 7; ++c) s += h(r, c);
    EXPECT_NEAR(g.R0_1[r], s / 7.0, 1e-12);
  }
}

TEST(Memory, FirstLevel) {
  Rng rng(2);
  auto p = AttentionLevelParams::zeros(2, 3, true);
  EXPECT_EQ(p.W_m.shape(), (Shape{3, 12}));
  GeneralRepr g{random_tensor(4, 1, rng, false), random_tensor(4, 1, rng, false)};
  for (double v : to_vec(memory_first(g, p))) EXPECT_EQ(v, 0.0);

  auto q = AttentionLevelParams::xavier(2, 3, true, rng);
  for (double& v : q.W_m.mutable_values()) v *= 10;
  auto M = memory_first(g, q);
  for (double v : M.values()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  // Equal arguments: the difference block contributes nothing.
  GeneralRepr same{g.R0_1, g.R0_1};
  auto full = memory_first(same, q);
  auto trimmed = q;
  trimmed.W_m = q.W_m.clone();
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 8; c < 12; ++c) trimmed.W_m.mutable_values()[r * 12 + c] = 0.0;
  EXPECT_EQ(to_vec(full), to_vec(memory_first(same, trimmed)));
}

TEST(Memory, NextLevelBlockDecomposition) {
  Rng rng(3);
  const std::size_t d = 2, d_m = 3;
  auto p = AttentionLevelParams::xavier(d, d_m, false, rng);
  EXPECT_EQ(p.W_m.shape(), (Shape{d_m, 6 * d + d_m}));
  auto R1 = random_tensor(2 * d, 1, rng, false);
  auto R2 = random_tensor(2 * d, 1, rng, false);
  auto Mp = random_tensor(d_m, 1, rng, false);
  // Zero the M_prev block; the leading 6d columns form a level-1 matrix.
  auto first = AttentionLevelParams::zeros(d, d_m, true);
  for (std::size_t r = 0; r < d_m; ++r)
    for (std::size_t c = 0; c < 6 * d + d_m; ++c) {
      if (c >= 6 * d)
        p.W_m.mutable_values()[r * (6 * d + d_m) + c] = 0.0;
      else
        first.W_m.mutable_values()[r * 6 * d + c] = p.W_m(r, c);
    }
  EXPECT_EQ(to_vec(memory_next(R1, R2, Mp, p)), to_vec(memory_first({R1, R2}, first)));

  auto z = AttentionLevelParams::zeros(d, d_m, false);
  for (double v : to_vec(memory_next(R1, R2, Mp, z))) EXPECT_EQ(v, 0.0);
}

TEST(Memory, WrongLevelTypeThrows) {
  Rng rng(4);
  auto first = AttentionLevelParams::zeros(2, 3, true);
  auto later = AttentionLevelParams::zeros(2, 3, false);
  auto R = random_tensor(4, 1, rng, false);
  auto M = random_tensor(3, 1, rng, false);
  EXPECT_THROW(memory_next(R, R, M, first), ShapeError);
  EXPECT_THROW(memory_first({R, R}, later), ShapeError);
}

TEST(Attend, ZeroScoresGiveMeanPooling) {
  Rng rng(5);
  auto p = AttentionLevelParams::xavier(2, 3, true, rng).arg1;
  for (double& v : p.W_s.mutable_values()) v = 0.0;
  auto h = random_tensor(4, 5, rng, false);
  auto r = attend(h, random_tensor(3, 1, rng, false), p);
  for (double v : r.a.values()) EXPECT_EQ(v, 0.2);
  EXPECT_EQ(to_vec(r.R), to_vec(mean_cols(h)));
}

TEST(Attend, SingleWord) {
  Rng rng(6);
  auto p = AttentionLevelParams::xavier(2, 3, true, rng).arg2;
  auto h = random_tensor(4, 1, rng, false);
  auto r = attend(h, random_tensor(3, 1, rng, false), p);
  EXPECT_EQ(r.a.item(), 1.0);
  EXPECT_EQ(to_vec(r.R), to_vec(h));
}

TEST(Attend, WeightedSumByExplicitLoop) {
  Rng rng(7);
  auto p = AttentionLevelParams::xavier(3, 4, true, rng).arg1;
  auto h = random_tensor(6, 8, rng, false);
  auto M = random_tensor(4, 1, rng, false);
  auto r = attend(h, M, p);
  // Scores recomputed from scratch.
  std::vector<double> scores(8);
  for (std::size_t t = 0; t < 8; ++t) {
    double s = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      double o = 0;
      for (std::size_t j = 0; j < 6; ++j) o += p.W_a(i, j) * h(j, t);
      for (std::size_t j = 0; j < 4; ++j) o += p.W_b(i, j) * M[j];
      s += p.W_s(0, i) * std::tanh(o);
    }
    scores[t] = s;
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0;
  for (double s : scores) z += std::exp(s - mx);
  for (std::size_t t = 0; t < 8; ++t) EXPECT_NEAR(r.a[t], std::exp(scores[t] - mx) / z, 1e-12);
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0;
    for (std::size_t t = 0; t < 8; ++t) s += r.a[t] * h(i, t);
    EXPECT_NEAR(r.R[i], s, 1e-12);
  }
}

TEST(RunStack, RequiresAtLeastOneLevel) {
  Rng rng(8);
  auto h = random_tensor(4, 3, rng, false);
  EXPECT_ANY_THROW(run_stack(h, h, {}));
}

TEST(RunStack, SingleLevelIsTheOneLevelPipeline) {
  Rng rng(9);
  auto levels = random_levels(2, 3, 1, rng);
  auto h1 = random_tensor(4, 5, rng, false), h2 = random_tensor(4, 3, rng, false);
  auto out = run_stack(h1, h2, levels);
  ASSERT_EQ(out.levels.size(), 1u);
  auto g = general_repr(h1, h2);
  auto M = memory_first(g, levels[0]);
  auto a1 = attend(h1, M, levels[0].arg1);
  auto a2 = attend(h2, M, levels[0].arg2);
  EXPECT_EQ(to_vec(out.levels[0].M), to_vec(M));
  EXPECT_EQ(to_vec(out.top_R1()), to_vec(a1.R));
  EXPECT_EQ(to_vec(out.top_R2()), to_vec(a2.R));
}

TEST(RunStack, ZeroParamsUniformEverywhere) {
  Rng rng(10);
  std::vector<AttentionLevelParams> levels;
  for (std::size_t k = 0; k < 3; ++k) levels.push_back(AttentionLevelParams::zeros(2, 3, k == 0));
  auto h1 = random_tensor(4, 5, rng, false), h2 = random_tensor(4, 2, rng, false);
  auto out = run_stack(h1, h2, levels);
  for (const auto& l : out.levels) {
    for (double v : l.M.values()) EXPECT_EQ(v, 0.0);
    for (double v : l.a1.values()) EXPECT_EQ(v, 0.2);
    for (double v : l.a2.values()) EXPECT_EQ(v, 0.5);
    EXPECT_EQ(to_vec(l.R1), to_vec(out.general.R0_1));
    EXPECT_EQ(to_vec(l.R2), to_vec(out.general.R0_2));
  }
}

TEST(RunStack, ReplayLevelThree) {
  Rng rng(11);
  auto levels = random_levels(2, 3, 3, rng);
  auto h1 = random_tensor(4, 6, rng, false), h2 = random_tensor(4, 4, rng, false);
  auto out = run_stack(h1, h2, levels);
  auto replay = run_level(h1, h2, out.general, &out.levels[1], levels[2]);
  EXPECT_EQ(to_vec(replay.M), to_vec(out.levels[2].M));
  EXPECT_EQ(to_vec(replay.a1), to_vec(out.levels[2].a1));
  EXPECT_EQ(to_vec(replay.a2), to_vec(out.levels[2].a2));
  EXPECT_EQ(to_vec(replay.R1), to_vec(out.levels[2].R1));
  EXPECT_EQ(to_vec(replay.R2), to_vec(out.levels[2].R2));
}

TEST(RunStack, InvariantsOnRandomInstances) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    auto levels = random_levels(2, 3, 3, rng);
    for (auto& l : levels)
      for (auto& t : l.parameters())
        for (double& v : Tensor(t).mutable_values()) v *= 4.0;
    const std::size_t L1 = 1 + rng.index(8), L2 = 1 + rng.index(8);
    auto h1 = random_tensor(4, L1, rng, false), h2 = random_tensor(4, L2, rng, false);
    auto out = run_stack(h1, h2, levels);
    for (const auto& l : out.levels) {
      for (const auto* pair : {&l.a1, &l.a2}) {
        double s = 0;
        for (double v : pair->values()) {
          EXPECT_GE(v, 0.0);
          s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-9);
      }
      for (double v : l.M.values()) EXPECT_LT(std::abs(v), 1.0);
      for (std::size_t r = 0; r < 4; ++r) {
        double lo = h1(r, 0), hi = h1(r, 0);
        for (std::size_t c = 0; c < L1; ++c) {
          lo = std::min(lo, h1(r, c));
          hi = std::max(hi, h1(r, c));
        }
        EXPECT_GE(l.R1[r], lo - 1e-12);
        EXPECT_LE(l.R1[r], hi + 1e-12);
      }
    }
  }
}

TEST(RunStack, UniformReductionForEveryDepth) {
  Rng rng(13);
  for (std::size_t K : {1u, 2u, 3u}) {
    auto levels = random_levels(3, 4, K, rng);
    zero_attention_scores(levels);
    auto h1 = random_tensor(6, 5, rng, false), h2 = random_tensor(6, 7, rng, false);
    auto out = run_stack(h1, h2, levels);
    for (const auto& l : out.levels) {
      EXPECT_EQ(to_vec(l.R1), to_vec(out.general.R0_1));
      EXPECT_EQ(to_vec(l.R2), to_vec(out.general.R0_2));
    }
  }
}

TEST(RunStack, GradientCheckTinyDims) {
  Rng rng(14);
  auto levels = random_levels(3, 4, 3, rng);
  auto h1 = random_tensor(6, 4, rng), h2 = random_tensor(6, 4, rng);
  std::vector<Tensor> params{h1, h2};
  for (auto& l : levels)
    for (auto& t : l.parameters()) params.push_back(t);
  auto w = random_tensor(12, 1, rng, false);
  const auto r = grad_check(
      [&] {
        auto out = run_stack(h1, h2, levels);
        return sum(hadamard(concat({out.top_R1(), out.top_R2()}), w));
      },
      params);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

}  // namespace
}  // namespace nnma
