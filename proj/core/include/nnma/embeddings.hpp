#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nnma/rng.hpp"
#include "nnma/tensor.hpp"

namespace nnma {

// Lowercases a UTF-8 token with simple (one-to-one) Unicode case mapping.
// Invalid UTF-8 bytes are passed through unchanged.
std::string normalize_token(std::string_view raw);

// Token -> dense index map. Index 0 is always the unknown token.
class Vocabulary {
 public:
  static constexpr std::string_view kUnknown = "<unk>";
  static constexpr std::size_t kUnknownIndex = 0;

  Vocabulary();

  // Adds the normalized form of `token` if absent; returns its index.
  std::size_t add(std::string_view token);
  // Index of the normalized token, or kUnknownIndex.
  std::size_t index_of(std::string_view token) const;
  // Index for an already-normalized token.
  std::size_t index_of_normalized(std::string_view token) const;
  bool contains(std::string_view token) const;

  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

  std::vector<std::size_t> encode(std::span<const std::string> tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Embedding table stored column-per-word: weights is (dim x vocab_size).
struct EmbeddingMatrix {
  Tensor weights;

  std::size_t dim() const { return weights.rows(); }
  std::size_t vocab_size() const { return weights.cols(); }
};

inline constexpr double kEmbeddingInitScale = 0.05;

// Every entry drawn from uniform(-0.05, 0.05), column by column.
EmbeddingMatrix random_embeddings(std::size_t dim, std::size_t vocab_size, Rng& rng);

struct PretrainedStats {
  std::size_t loaded = 0;     // lines whose token is in the vocabulary
  std::size_t unused = 0;     // well-formed lines for tokens outside the vocabulary
  std::size_t malformed = 0;  // lines with the wrong number of values or bad numbers
  std::size_t duplicates = 0; // repeated tokens; the first occurrence wins
};

// Reads `token v1 ... v_dim` lines. The table is first filled with the
// random initialization, then columns for tokens found in the stream are
// overwritten, so tokens missing from the file (and <unk>) keep their random
// vectors. Throws std::ios_base::failure if the stream is unreadable.
EmbeddingMatrix load_pretrained(std::istream& in, std::size_t dim, const Vocabulary& vocab,
                                Rng& rng, PretrainedStats* stats = nullptr);

// Writes the table in the same text format, one vocabulary entry per line,
// with round-trip precision.
void write_pretrained(std::ostream& out, const EmbeddingMatrix& emb, const Vocabulary& vocab);

// (dim x L) matrix whose column i embeds tokens[i]; OOV tokens map to <unk>.
Tensor embed_sequence(std::span<const std::string> tokens, const Vocabulary& vocab,
                      const EmbeddingMatrix& emb);
Tensor embed_indices(std::span<const std::size_t> indices, const EmbeddingMatrix& emb);

}  // namespace nnma
