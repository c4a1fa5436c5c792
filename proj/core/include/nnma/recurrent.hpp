#pragma once

#include <cstddef>
#include <vector>

#include "nnma/rng.hpp"
#include "nnma/tensor.hpp"

namespace nnma {

// Gate weights act on the concatenation [x; h_prev], so each W is
// (hidden x (input + hidden)) and each b is (hidden x 1).
struct LstmParams {
  Tensor W_i, W_f, W_o, W_c;
  Tensor b_i, b_f, b_o, b_c;

  static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim);
  // Weights uniform(-r, r), r = sqrt(6 / (fan_in + fan_out)); biases zero.
  static LstmParams xavier(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

  std::size_t hidden_dim() const { return b_i.rows(); }
  std::size_t input_dim() const { return W_i.cols() - b_i.rows(); }

  // W_i, W_f, W_o, W_c, b_i, b_f, b_o, b_c
  std::vector<Tensor> parameters() const;
};

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;

  std::vector<Tensor> parameters() const;
};

struct LstmState {
  Tensor h;
  Tensor c;
};

// i = sigmoid(W_i[x;h] + b_i), f = sigmoid(W_f[x;h] + b_f),
// o = sigmoid(W_o[x;h] + b_o), c~ = tanh(W_c[x;h] + b_c),
// c = i*c~ + f*c_prev, h = o*tanh(c).
LstmState lstm_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                    const LstmParams& p);

// Runs over the columns of seq (input x L) from zero initial state. Column i
// of the result is the hidden state after reading word i; for reversed runs
// the output is re-aligned to the original word order.
Tensor run_direction(const Tensor& seq, const LstmParams& p, bool reversed);

// (2*hidden x L): forward states stacked over aligned backward states.
Tensor bi_encode(const Tensor& seq, const BiLstmParams& p);

}  // namespace nnma
