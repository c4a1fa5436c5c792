#include "nnma/recurrent.hpp"

#include <cmath>

#include "nnma/init.hpp"

namespace nnma {

namespace {

Tensor affine(const Tensor& W, const Tensor& xh, const Tensor& b) {
  return add(matmul(W, xh), b);
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  const std::size_t in = input_dim + hidden_dim;
  auto w = [&] { return Tensor::zeros(hidden_dim, in, true); };
  auto b = [&] { return Tensor::zeros(hidden_dim, 1, true); };
  return {w(), w(), w(), w(), b(), b(), b(), b()};
}

LstmParams LstmParams::xavier(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  LstmParams p = zeros(input_dim, hidden_dim);
  const std::size_t in = input_dim + hidden_dim;
  p.W_i = xavier_uniform(hidden_dim, in, rng);
  p.W_f = xavier_uniform(hidden_dim, in, rng);
  p.W_o = xavier_uniform(hidden_dim, in, rng);
  p.W_c = xavier_uniform(hidden_dim, in, rng);
  return p;
}

std::vector<Tensor> LstmParams::parameters() const {
  return {W_i, W_f, W_o, W_c, b_i, b_f, b_o, b_c};
}

std::vector<Tensor> BiLstmParams::parameters() const {
  auto out = forward.parameters();
  auto bwd = backward.parameters();
  out.insert(out.end(), bwd.begin(), bwd.end());
  return out;
}

LstmState lstm_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                    const LstmParams& p) {
  const std::size_t d = p.hidden_dim();
  if (x.cols() != 1 || x.rows() != p.input_dim())
    throw ShapeError("lstm_step: input " + to_string(x.shape()) + " vs expected " +
                     to_string({p.input_dim(), 1}));
  if (h_prev.shape() != Shape{d, 1} || c_prev.shape() != Shape{d, 1})
    throw ShapeError("lstm_step: state " + to_string(h_prev.shape()) + "/" +
                     to_string(c_prev.shape()) + " vs expected " + to_string({d, 1}));

  const Tensor xh = concat({x, h_prev});
  const Tensor i = sigmoid(affine(p.W_i, xh, p.b_i));
  const Tensor f = sigmoid(affine(p.W_f, xh, p.b_f));
  const Tensor o = sigmoid(affine(p.W_o, xh, p.b_o));
  const Tensor c_tilde = tanh(affine(p.W_c, xh, p.b_c));
  Tensor c = add(hadamard(i, c_tilde), hadamard(f, c_prev));
  Tensor h = hadamard(o, tanh(c));
  return {std::move(h), std::move(c)};
}

Tensor run_direction(const Tensor& seq, const LstmParams& p, bool reversed) {
  const std::size_t L = seq.cols();
  if (L == 0) throw ShapeError("run_direction: empty sequence");
  const std::size_t d = p.hidden_dim();
  LstmState state{Tensor::zeros(d, 1), Tensor::zeros(d, 1)};
  std::vector<Tensor> outputs(L);
  for (std::size_t step = 0; step < L; ++step) {
    const std::size_t pos = reversed ? L - 1 - step : step;
    state = lstm_step(column(seq, pos), state.h, state.c, p);
    outputs[pos] = state.h;
  }
  return concat_cols(outputs);
}

Tensor bi_encode(const Tensor& seq, const BiLstmParams& p) {
  if (p.forward.hidden_dim() != p.backward.hidden_dim())
    throw ShapeError("bi_encode: direction hidden sizes differ");
  return concat({run_direction(seq, p.forward, false), run_direction(seq, p.backward, true)});
}

}  // namespace nnma
