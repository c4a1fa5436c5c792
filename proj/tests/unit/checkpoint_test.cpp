#include <gtest/gtest.h>

#include <sstream>

#include "nnma/checkpoint.hpp"
#include "test_util.hpp"

namespace nnma {
namespace {

using test::to_vec;

NnmaModel make_model(std::uint64_t seed) {
  Vocabulary v;
  for (const char* t : {"alpha", "beta", "gamma", "\xC3\xA9t\xC3\xA9"}) v.add(t);
  Rng rng(seed);
  return NnmaModel::create({3, 2, 3, 2, 3}, std::move(v), {"x", "y", "z"}, rng);
}

void expect_same_parameters(const NnmaModel& a, const NnmaModel& b) {
  const auto pa = a.parameters(), pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].shape(), pb[i].shape());
    EXPECT_EQ(to_vec(pa[i]), to_vec(pb[i])) << i;
    EXPECT_TRUE(pb[i].requires_grad());
  }
}

TEST(Checkpoint, RoundTripFreshModel) {
  auto m = make_model(1);
  std::stringstream buf;
  save_checkpoint(buf, m);
  auto c = load_checkpoint(buf);
  EXPECT_EQ(c.model.dims, m.dims);
  EXPECT_EQ(c.model.label_names, m.label_names);
  EXPECT_EQ(c.model.vocab.tokens(), m.vocab.tokens());
  EXPECT_FALSE(c.trainer_state.has_value());
  expect_same_parameters(m, c.model);
}

TEST(Checkpoint, SaveIsDeterministic) {
  std::stringstream a, b;
  save_checkpoint(a, make_model(2));
  save_checkpoint(b, make_model(2));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Checkpoint, CorruptedMagic) {
  std::stringstream buf;
  save_checkpoint(buf, make_model(3));
  std::string bytes = buf.str();
  bytes[0] = 'X';
  std::istringstream in(bytes);
  EXPECT_THROW(load_checkpoint(in), CheckpointError);
}

TEST(Checkpoint, WrongVersion) {
  std::stringstream buf;
  save_checkpoint(buf, make_model(3));
  std::string bytes = buf.str();
  bytes[8] = 9;
  std::istringstream in(bytes);
  EXPECT_THROW(load_checkpoint(in), CheckpointError);
}

TEST(Checkpoint, TruncationAnywhere) {
  std::stringstream buf;
  save_checkpoint(buf, make_model(4));
  const std::string bytes = buf.str();
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{20}, bytes.size() / 2,
                          bytes.size() - 1}) {
    std::istringstream in(bytes.substr(0, cut));
    EXPECT_THROW(load_checkpoint(in), CheckpointError) << cut;
  }
}

TEST(Checkpoint, InconsistentShapeHeader) {
  std::stringstream buf;
  save_checkpoint(buf, make_model(5));
  std::string bytes = buf.str();
  // Hidden size d lives right after magic + version + D_e.
  bytes[8 + 4 + 8] = 7;
  std::istringstream in(bytes);
  EXPECT_THROW(load_checkpoint(in), CheckpointError);
}

TEST(Checkpoint, MissingFile) {
  EXPECT_THROW(load_checkpoint(std::filesystem::path("/nonexistent/model.ckpt")),
               CheckpointError);
}

TEST(Checkpoint, TrainerStateRoundTrip) {
  auto m = make_model(6);
  Hyperparams hp;
  hp.embedding_dim = 3;
  hp.hidden_dim = 2;
  hp.memory_dim = 3;
  Trainer t(m, hp);
  LabeledPair ex{{{1, 2}, {3, 4, 1}}, 2};
  for (int i = 0; i < 3; ++i) t.step(ex, 1.0);
  std::stringstream buf;
  save_checkpoint(buf, m, &t.state());
  auto c = load_checkpoint(buf);
  ASSERT_TRUE(c.trainer_state.has_value());
  EXPECT_EQ(c.trainer_state->steps, 3u);
  EXPECT_EQ(c.trainer_state->rng.state(), t.state().rng.state());
  EXPECT_EQ(c.trainer_state->optimizer, t.state().optimizer);
  expect_same_parameters(m, c.model);
}

TEST(Checkpoint, ContinueTrainingMatchesUninterrupted) {
  Hyperparams hp;
  hp.embedding_dim = 3;
  hp.hidden_dim = 2;
  hp.memory_dim = 3;
  const std::vector<LabeledPair> data{
      {{{1, 2}, {3, 4, 1}}, 2}, {{{4}, {2, 2}}, 0}, {{{3, 1, 4}, {1}}, 1}};

  auto straight = make_model(7);
  Trainer a(straight, hp);
  std::vector<double> expected;
  for (int i = 0; i < 10; ++i) expected.push_back(a.step(data[i % 3], 1.0));

  auto first = make_model(7);
  Trainer b(first, hp);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(b.step(data[i % 3], 1.0), expected[i]);
  std::stringstream buf;
  save_checkpoint(buf, first, &b.state());
  auto c = load_checkpoint(buf);
  Trainer resumed(c.model, hp, *c.trainer_state);
  for (int i = 5; i < 10; ++i) EXPECT_EQ(resumed.step(data[i % 3], 1.0), expected[i]) << i;
}

}  // namespace
}  // namespace nnma
