#include "nnma/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "nnma/init.hpp"

namespace nnma {

namespace {

void expect_shape(const Tensor& t, Shape expected, const std::string& name) {
  if (!t.defined()) throw ShapeError(name + ": missing");
  if (t.shape() != expected)
    throw ShapeError(name + ": shape " + to_string(t.shape()) + ", expected " +
                     to_string(expected));
}

void expect_lstm(const LstmParams& p, const ModelDims& dims, const std::string& name) {
  const std::size_t d = dims.hidden_dim, in = dims.embedding_dim + dims.hidden_dim;
  const char* w_names[] = {"W_i", "W_f", "W_o", "W_c"};
  const Tensor* ws[] = {&p.W_i, &p.W_f, &p.W_o, &p.W_c};
  const Tensor* bs[] = {&p.b_i, &p.b_f, &p.b_o, &p.b_c};
  const char* b_names[] = {"b_i", "b_f", "b_o", "b_c"};
  for (int k = 0; k < 4; ++k) {
    expect_shape(*ws[k], {d, in}, name + "." + w_names[k]);
    expect_shape(*bs[k], {d, 1}, name + "." + b_names[k]);
  }
}

}  // namespace

NnmaModel NnmaModel::create(const ModelDims& dims, Vocabulary vocab,
                            std::vector<std::string> label_names, Rng& rng,
                            std::optional<EmbeddingMatrix> pretrained) {
  if (label_names.size() != dims.classes)
    throw std::invalid_argument("NnmaModel::create: " + std::to_string(label_names.size()) +
                                " labels for " + std::to_string(dims.classes) + " classes");
  NnmaModel m;
  m.dims = dims;
  m.vocab = std::move(vocab);
  m.label_names = std::move(label_names);
  m.embeddings = pretrained ? std::move(*pretrained)
                            : random_embeddings(dims.embedding_dim, m.vocab.size(), rng);
  const std::size_t D_e = dims.embedding_dim, d = dims.hidden_dim;
  m.enc1 = {LstmParams::xavier(D_e, d, rng), LstmParams::xavier(D_e, d, rng)};
  m.enc2 = {LstmParams::xavier(D_e, d, rng), LstmParams::xavier(D_e, d, rng)};
  for (std::size_t k = 0; k < dims.levels; ++k)
    m.levels.push_back(AttentionLevelParams::xavier(d, dims.memory_dim, k == 0, rng));
  m.W_p = xavier_uniform(dims.classes, 6 * d, rng);
  m.b_p = Tensor::zeros(dims.classes, 1, true);
  m.validate();
  return m;
}

void NnmaModel::validate() const {
  if (dims.classes < 2) throw ShapeError("model: need at least 2 classes");
  if (dims.levels < 1 || levels.size() != dims.levels)
    throw ShapeError("model: expected " + std::to_string(dims.levels) + " attention levels, have " +
                     std::to_string(levels.size()));
  if (label_names.size() != dims.classes)
    throw ShapeError("model: label count does not match class count");
  expect_shape(embeddings.weights, {dims.embedding_dim, vocab.size()}, "embeddings");
  expect_lstm(enc1.forward, dims, "enc1.forward");
  expect_lstm(enc1.backward, dims, "enc1.backward");
  expect_lstm(enc2.forward, dims, "enc2.forward");
  expect_lstm(enc2.backward, dims, "enc2.backward");
  const std::size_t d = dims.hidden_dim, dm = dims.memory_dim;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto& lv = levels[k];
    const std::string name = "level" + std::to_string(k + 1);
    expect_shape(lv.W_m, {dm, k == 0 ? 6 * d : 6 * d + dm}, name + ".W_m");
    for (const auto* arg : {&lv.arg1, &lv.arg2}) {
      expect_shape(arg->W_a, {2 * d, 2 * d}, name + ".W_a");
      expect_shape(arg->W_b, {2 * d, dm}, name + ".W_b");
      expect_shape(arg->W_s, {1, 2 * d}, name + ".W_s");
    }
  }
  expect_shape(W_p, {dims.classes, 6 * d}, "W_p");
  expect_shape(b_p, {dims.classes, 1}, "b_p");
}

std::vector<ParameterGroup> NnmaModel::parameter_groups() const {
  std::vector<ParameterGroup> groups;
  groups.push_back({"embeddings", {embeddings.weights}});
  groups.push_back({"enc1", enc1.parameters()});
  groups.push_back({"enc2", enc2.parameters()});
  for (std::size_t k = 0; k < levels.size(); ++k)
    groups.push_back({"level" + std::to_string(k + 1), levels[k].parameters()});
  groups.push_back({"classifier", {W_p, b_p}});
  return groups;
}

std::vector<Tensor> NnmaModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& g : parameter_groups()) out.insert(out.end(), g.tensors.begin(), g.tensors.end());
  return out;
}

std::vector<Tensor> NnmaModel::network_parameters() const {
  auto all = parameters();
  return {all.begin() + 1, all.end()};
}

std::size_t NnmaModel::label_index(const std::string& label) const {
  auto it = std::find(label_names.begin(), label_names.end(), label);
  if (it == label_names.end())
    throw std::out_of_range("label '" + label + "' is not one of the model's classes");
  return static_cast<std::size_t>(it - label_names.begin());
}

EncodedPair NnmaModel::encode(const Instance& inst) const {
  return {vocab.encode(inst.arg1), vocab.encode(inst.arg2)};
}

void NnmaModel::zero_grad() {
  for (auto& p : parameters()) p.zero_grad();
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

Prediction forward(const NnmaModel& model, const EncodedPair& pair, const Tensor* dropout_mask) {
  if (pair.arg1.empty() || pair.arg2.empty())
    throw std::invalid_argument("forward: both arguments must be non-empty");
  const Tensor h1 = bi_encode(embed_indices(pair.arg1, model.embeddings), model.enc1);
  const Tensor h2 = bi_encode(embed_indices(pair.arg2, model.embeddings), model.enc2);

  Prediction pred;
  pred.trace = run_stack(h1, h2, model.levels);
  const Tensor& R1 = pred.trace.top_R1();
  const Tensor& R2 = pred.trace.top_R2();
  Tensor feature = concat({R1, R2, sub(R1, R2)});
  if (dropout_mask) {
    if (dropout_mask->shape() != feature.shape())
      throw ShapeError("forward: dropout mask " + to_string(dropout_mask->shape()) +
                       " vs feature " + to_string(feature.shape()));
    feature = hadamard(feature, *dropout_mask);
  }
  pred.logits = add(matmul(model.W_p, feature), model.b_p);
  pred.P = softmax(pred.logits);
  pred.predicted_label = argmax(pred.P.values());
  return pred;
}

Prediction forward(const NnmaModel& model, const Instance& inst, const Tensor* dropout_mask) {
  return forward(model, model.encode(inst), dropout_mask);
}

Tensor loss(const Prediction& prediction, std::size_t gold, double weight) {
  if (weight < 0.0) throw std::invalid_argument("loss: negative instance weight");
  return softmax_cross_entropy(prediction.logits, gold, weight);
}

}  // namespace nnma
