#pragma once

#include <cstddef>

#include "amcnn/rng.hpp"
#include "amcnn/tensor.hpp"

namespace amcnn {

/// One LSTM direction. Every gate matrix multiplies the concatenation
/// [h_prev, x_t], so each is hidden x (hidden + input).
struct LstmParams {
  Tensor forget_weight, input_weight, output_weight, cell_weight;
  Tensor forget_bias, input_bias, output_bias, cell_bias;

  std::size_t hidden_size() const { return forget_bias.dim(0); }
  std::size_t input_size() const { return forget_weight.dim(1) - hidden_size(); }
  void validate() const;

  /// Weights from U[-scale, scale], zero biases.
  static LstmParams init(std::size_t hidden, std::size_t input, Rng& rng, double scale = 0.08);
  static LstmParams zeros(std::size_t hidden, std::size_t input);
};

struct LstmState {
  Tensor h;
  Tensor c;

  static LstmState zeros(std::size_t hidden);
};

/// One step of the recurrence: gates from [h_prev, x], then
/// c = f*c_prev + i*c~ and h = o*tanh(c).
LstmState lstm_cell(Tape& tape, const Tensor& x, const LstmState& prev, const LstmParams& p);

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;

  void validate() const;
};

/// Encodes rows of X[n x k] into H[n x 2d]: row i is the forward state after
/// reading x_1..x_i next to the backward state after reading x_n..x_i.
/// Both directions start from zero states.
Tensor bilstm_encode(Tape& tape, const Tensor& inputs, const BiLstmParams& p);

}  // namespace amcnn
