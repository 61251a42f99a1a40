#include "amcnn/bilstm.hpp"

#include <vector>

#include "amcnn/errors.hpp"
#include "amcnn/ops.hpp"

namespace amcnn {
namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> values(rows * cols);
  for (double& v : values) v = dist(rng);
  return Tensor::matrix(rows, cols, std::move(values));
}

void check_gate(const Tensor& w, const Tensor& b, const Tensor& ref_w, const char* name) {
  if (!w.defined() || !b.defined() || w.rank() != 2 || b.rank() != 1 ||
      w.shape() != ref_w.shape() || b.dim(0) != w.dim(0) || w.dim(1) <= w.dim(0)) {
    throw DimensionError(std::string("LSTM ") + name + " gate has inconsistent shapes");
  }
}

Tensor gate(Tape& tape, const Tensor& w, const Tensor& b, const Tensor& joined) {
  return add(tape, matvec(tape, w, joined), b);
}

}  // namespace

void LstmParams::validate() const {
  if (!forget_weight.defined() || forget_weight.rank() != 2) {
    throw DimensionError("LSTM forget gate weight must be a matrix");
  }
  check_gate(forget_weight, forget_bias, forget_weight, "forget");
  check_gate(input_weight, input_bias, forget_weight, "input");
  check_gate(output_weight, output_bias, forget_weight, "output");
  check_gate(cell_weight, cell_bias, forget_weight, "cell");
}

LstmParams LstmParams::init(std::size_t hidden, std::size_t input, Rng& rng, double scale) {
  LstmParams p;
  const std::size_t cols = hidden + input;
  p.forget_weight = uniform_matrix(hidden, cols, rng, scale);
  p.input_weight = uniform_matrix(hidden, cols, rng, scale);
  p.output_weight = uniform_matrix(hidden, cols, rng, scale);
  p.cell_weight = uniform_matrix(hidden, cols, rng, scale);
  p.forget_bias = Tensor::zeros({hidden});
  p.input_bias = Tensor::zeros({hidden});
  p.output_bias = Tensor::zeros({hidden});
  p.cell_bias = Tensor::zeros({hidden});
  return p;
}

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
  LstmParams p;
  const std::size_t cols = hidden + input;
  p.forget_weight = Tensor::zeros({hidden, cols});
  p.input_weight = Tensor::zeros({hidden, cols});
  p.output_weight = Tensor::zeros({hidden, cols});
  p.cell_weight = Tensor::zeros({hidden, cols});
  p.forget_bias = Tensor::zeros({hidden});
  p.input_bias = Tensor::zeros({hidden});
  p.output_bias = Tensor::zeros({hidden});
  p.cell_bias = Tensor::zeros({hidden});
  return p;
}

LstmState LstmState::zeros(std::size_t hidden) {
  return {Tensor::zeros({hidden}), Tensor::zeros({hidden})};
}

LstmState lstm_cell(Tape& tape, const Tensor& x, const LstmState& prev, const LstmParams& p) {
  const std::size_t d = p.hidden_size();
  if (x.rank() != 1 || x.dim(0) != p.input_size() || prev.h.rank() != 1 ||
      prev.h.dim(0) != d || prev.c.rank() != 1 || prev.c.dim(0) != d) {
    throw DimensionError("lstm_cell: x " + shape_str(x.shape()) + ", h " +
                         shape_str(prev.h.shape()) + ", c " + shape_str(prev.c.shape()) +
                         " do not fit hidden " + std::to_string(d) + ", input " +
                         std::to_string(p.input_size()));
  }
  const Tensor joined = concat(tape, prev.h, x, 0);
  const Tensor f = sigmoid(tape, gate(tape, p.forget_weight, p.forget_bias, joined));
  const Tensor i = sigmoid(tape, gate(tape, p.input_weight, p.input_bias, joined));
  const Tensor o = sigmoid(tape, gate(tape, p.output_weight, p.output_bias, joined));
  const Tensor candidate = tanh(tape, gate(tape, p.cell_weight, p.cell_bias, joined));
  const Tensor c = add(tape, mul(tape, f, prev.c), mul(tape, i, candidate));
  const Tensor h = mul(tape, o, tanh(tape, c));
  return {h, c};
}

void BiLstmParams::validate() const {
  forward.validate();
  backward.validate();
  if (forward.forget_weight.shape() != backward.forget_weight.shape()) {
    throw DimensionError("Bi-LSTM directions disagree: " +
                         shape_str(forward.forget_weight.shape()) + " vs " +
                         shape_str(backward.forget_weight.shape()));
  }
}

Tensor bilstm_encode(Tape& tape, const Tensor& inputs, const BiLstmParams& p) {
  if (inputs.rank() != 2 || inputs.dim(0) < 1 || inputs.dim(1) != p.forward.input_size()) {
    throw DimensionError("bilstm_encode: inputs " + shape_str(inputs.shape()) +
                         " do not fit input size " + std::to_string(p.forward.input_size()));
  }
  const std::size_t n = inputs.dim(0);
  const std::size_t d = p.forward.hidden_size();
  std::vector<Tensor> steps;
  steps.reserve(n);
  for (std::size_t t = 0; t < n; ++t) steps.push_back(row(tape, inputs, t));

  std::vector<Tensor> fwd(n), bwd(n);
  LstmState state = LstmState::zeros(d);
  for (std::size_t t = 0; t < n; ++t) {
    state = lstm_cell(tape, steps[t], state, p.forward);
    fwd[t] = state.h;
  }
  state = LstmState::zeros(d);
  for (std::size_t t = n; t-- > 0;) {
    state = lstm_cell(tape, steps[t], state, p.backward);
    bwd[t] = state.h;
  }
  return concat(tape, stack_rows(tape, fwd), stack_rows(tape, bwd), 1);
}

}  // namespace amcnn
