#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "nnma/embeddings.hpp"
#include "test_util.hpp"

namespace nnma {
namespace {

TEST(NormalizeToken, Lowercases) {
  EXPECT_EQ(normalize_token("Expanding"), "expanding");
  EXPECT_EQ(normalize_token("RAPIDLY"), "rapidly");
  EXPECT_EQ(normalize_token("900"), "900");
  EXPECT_EQ(normalize_token(""), "");
}

TEST(NormalizeToken, NonAscii) {
  EXPECT_EQ(normalize_token("\xC3\x89T\xC3\x89"), "\xC3\xA9t\xC3\xA9");  // ÉTÉ -> été
  EXPECT_EQ(normalize_token("\xCE\xA3"), "\xCF\x83");                  // Σ -> σ
  EXPECT_EQ(normalize_token("a\xFFZ"), "a\xFFz");                      // invalid byte kept
}

TEST(Vocabulary, UnknownIsZero) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 1u);
  EXPECT_EQ(v.token(0), "<unk>");
  EXPECT_EQ(v.index_of("anything"), Vocabulary::kUnknownIndex);
}

TEST(Vocabulary, DenseIndices) {
  Vocabulary v;
  EXPECT_EQ(v.add("The"), 1u);
  EXPECT_EQ(v.add("cat"), 2u);
  EXPECT_EQ(v.add("the"), 1u);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.index_of("THE"), 1u);
  EXPECT_TRUE(v.contains("Cat"));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.index_of_normalized(v.token(i)), i);
}

TEST(RandomEmbeddings, RangeAndSeed) {
  Rng a(5), b(5);
  auto e1 = random_embeddings(4, 10, a);
  auto e2 = random_embeddings(4, 10, b);
  EXPECT_EQ(e1.weights.shape(), (Shape{4, 10}));
  EXPECT_TRUE(e1.weights.requires_grad());
  for (std::size_t i = 0; i < e1.weights.size(); ++i) {
    EXPECT_EQ(e1.weights[i], e2.weights[i]);
    EXPECT_LT(std::abs(e1.weights[i]), kEmbeddingInitScale);
  }
}

TEST(LoadPretrained, ParsesLine) {
  Vocabulary v;
  v.add("the");
  std::istringstream in("the 0.1 -0.2\n");
  Rng rng(1);
  auto e = load_pretrained(in, 2, v, rng);
  EXPECT_EQ(e.weights(0, 1), 0.1);
  EXPECT_EQ(e.weights(1, 1), -0.2);
}

TEST(LoadPretrained, MissingTokenReproducibleRandom) {
  Vocabulary v;
  v.add("the");
  v.add("absent");
  auto load = [&] {
    std::istringstream in("the 0.1 -0.2\n");
    Rng rng(11);
    return load_pretrained(in, 2, v, rng);
  };
  auto a = load(), b = load();
  EXPECT_EQ(a.weights(0, 2), b.weights(0, 2));
  EXPECT_LT(std::abs(a.weights(0, 2)), kEmbeddingInitScale);
  Rng rng(11);
  auto reference = random_embeddings(2, 3, rng);
  EXPECT_EQ(a.weights(1, 2), reference.weights(1, 2));
}

TEST(LoadPretrained, FixtureWithOneMalformedLine) {
  std::ifstream in(std::string(NNMA_FIXTURE_DIR) + "/vectors_malformed.txt");
  ASSERT_TRUE(in);
  Vocabulary v;
  for (const char* t : {"alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
                        "iota", "kappa"})
    v.add(t);
  Rng rng(1);
  PretrainedStats stats;
  auto e = load_pretrained(in, 3, v, rng, &stats);
  EXPECT_EQ(stats.loaded, 9u);
  EXPECT_EQ(stats.malformed, 1u);
  EXPECT_EQ(e.weights(2, v.index_of("kappa")), 3.5);
}

TEST(LoadPretrained, DuplicatesAndUnused) {
  Vocabulary v;
  v.add("a");
  std::istringstream in("a 1 2\na 3 4\nb 5 6\nc 1\n");
  Rng rng(1);
  PretrainedStats s;
  auto e = load_pretrained(in, 2, v, rng, &s);
  EXPECT_EQ(s.loaded, 1u);
  EXPECT_EQ(s.duplicates, 1u);
  EXPECT_EQ(s.unused, 1u);
  EXPECT_EQ(s.malformed, 1u);
  EXPECT_EQ(e.weights(0, 1), 1.0);
}

TEST(LoadPretrained, UnreadableStreamThrows) {
  std::ifstream in("/nonexistent/vectors.txt");
  Vocabulary v;
  Rng rng(1);
  EXPECT_THROW(load_pretrained(in, 2, v, rng), std::ios_base::failure);
}

TEST(LoadPretrained, RoundTrip) {
  Vocabulary v;
  for (const char* t : {"x", "y", "z"}) v.add(t);
  Rng rng(3);
  auto original = random_embeddings(5, v.size(), rng);
  original.weights.mutable_values()[3] = 1.0 / 3.0;
  std::stringstream buf;
  write_pretrained(buf, original, v);
  Rng other(99);
  PretrainedStats s;
  auto loaded = load_pretrained(buf, 5, v, other, &s);
  EXPECT_EQ(s.loaded, v.size());
  EXPECT_EQ(test::to_vec(loaded.weights), test::to_vec(original.weights));
}

TEST(EmbedSequence, KnownAndUnknown) {
  Vocabulary v;
  v.add("hello");
  Rng rng(2);
  auto e = random_embeddings(3, v.size(), rng);
  std::vector<std::string> one{"Hello"};
  auto s = embed_sequence(one, v, e);
  EXPECT_EQ(s.shape(), (Shape{3, 1}));
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(s(r, 0), e.weights(r, 1));
  std::vector<std::string> two{"hello", "zzz"};
  auto t = embed_sequence(two, v, e);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(t(r, 1), e.weights(r, 0));
  EXPECT_THROW(embed_sequence(std::vector<std::string>{}, v, e), std::invalid_argument);
}

TEST(EmbedSequence, GradientTouchesOnlyUsedColumns) {
  Vocabulary v;
  for (int i = 0; i < 8; ++i) v.add("t" + std::to_string(i));
  Rng rng(4);
  auto e = random_embeddings(2, v.size(), rng);
  std::vector<std::string> seq{"t2", "t5", "t2", "missing"};
  sum(embed_sequence(seq, v, e)).backward();
  const std::set<std::size_t> used{v.index_of("t2"), v.index_of("t5"), 0};
  for (std::size_t col = 0; col < v.size(); ++col)
    for (std::size_t r = 0; r < 2; ++r) {
      const double g = e.weights.grad()[r * v.size() + col];
      if (used.count(col))
        EXPECT_NE(g, 0.0) << col;
      else
        EXPECT_EQ(g, 0.0) << col;
    }
  EXPECT_EQ(e.weights.grad()[v.index_of("t2")], 2.0);
}

}  // namespace
}  // namespace nnma
