#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nnma/attention.hpp"
#include "nnma/corpus.hpp"
#include "nnma/embeddings.hpp"
#include "nnma/recurrent.hpp"
#include "nnma/rng.hpp"
#include "nnma/tensor.hpp"

namespace nnma {

struct ModelDims {
  std::size_t embedding_dim = 50;  // D_e
  std::size_t hidden_dim = 50;     // d
  std::size_t memory_dim = 200;    // d_m
  std::size_t levels = 2;          // K
  std::size_t classes = 4;         // n

  bool operator==(const ModelDims&) const = default;
};

struct ParameterGroup {
  std::string name;
  std::vector<Tensor> tensors;
};

// Argument pair already mapped to vocabulary indices.
struct EncodedPair {
  std::vector<std::size_t> arg1;
  std::vector<std::size_t> arg2;
};

struct NnmaModel {
  ModelDims dims;
  Vocabulary vocab;
  EmbeddingMatrix embeddings;
  BiLstmParams enc1;  // Arg-1 encoder
  BiLstmParams enc2;  // Arg-2 encoder
  std::vector<AttentionLevelParams> levels;
  Tensor W_p;  // (n x 6d)
  Tensor b_p;  // (n x 1)
  std::vector<std::string> label_names;

  // Draws every parameter from `rng` in checkpoint order: embeddings (unless
  // supplied), enc1, enc2, levels 1..K, W_p. Biases start at zero.
  static NnmaModel create(const ModelDims& dims, Vocabulary vocab,
                          std::vector<std::string> label_names, Rng& rng,
                          std::optional<EmbeddingMatrix> pretrained = std::nullopt);

  // Checks every parameter shape against dims; throws ShapeError.
  void validate() const;

  // embeddings, enc1, enc2, level1..levelK, classifier.
  std::vector<ParameterGroup> parameter_groups() const;
  // Flat list in checkpoint order.
  std::vector<Tensor> parameters() const;
  // Everything except the embedding table.
  std::vector<Tensor> network_parameters() const;

  std::size_t label_index(const std::string& label) const;
  EncodedPair encode(const Instance& inst) const;
  void zero_grad();
};

struct Prediction {
  Tensor logits;  // (n x 1)
  Tensor P;       // (n x 1)
  std::size_t predicted_label = 0;
  StackOutput trace;
};

// Lowest index wins ties.
std::size_t argmax(std::span<const double> values);

// feature = [R_K^1; R_K^2; R_K^1 - R_K^2], optionally multiplied by a
// dropout mask, then P = softmax(W_p feature + b_p).
Prediction forward(const NnmaModel& model, const EncodedPair& pair,
                   const Tensor* dropout_mask = nullptr);
Prediction forward(const NnmaModel& model, const Instance& inst,
                   const Tensor* dropout_mask = nullptr);

// weight * -log P[gold], computed from the logits with log-sum-exp.
Tensor loss(const Prediction& prediction, std::size_t gold, double weight = 1.0);

}  // namespace nnma
