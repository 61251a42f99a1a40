#include "amcnn/attention.hpp"

#include "amcnn/errors.hpp"
#include "amcnn/ops.hpp"

namespace amcnn {

std::string to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::scalar: return "scalar";
    case AttentionMode::vectorial: return "vectorial";
    case AttentionMode::combined: return "combined";
  }
  return "combined";
}

AttentionMode parse_attention_mode(const std::string& text) {
  if (text == "scalar") return AttentionMode::scalar;
  if (text == "vectorial") return AttentionMode::vectorial;
  if (text == "combined") return AttentionMode::combined;
  throw ConfigError("unknown attention mode '" + text + "' (scalar|vectorial|combined)");
}

std::string to_string(SumAxis axis) { return axis == SumAxis::column ? "column" : "row"; }

SumAxis parse_sum_axis(const std::string& text) {
  if (text == "column") return SumAxis::column;
  if (text == "row") return SumAxis::row;
  throw ConfigError("unknown sum axis '" + text + "' (column|row)");
}

Tensor association_matrix(Tape& tape, const Tensor& hidden, const Tensor& weight,
                          const Tensor& bias) {
  if (hidden.rank() != 2 || weight.rank() != 2 || weight.dim(0) != hidden.dim(1) ||
      weight.dim(1) != hidden.dim(1) || bias.size() != 1) {
    throw DimensionError("association_matrix: H " + shape_str(hidden.shape()) + ", W " +
                         shape_str(weight.shape()) + ", b " + shape_str(bias.shape()));
  }
  const Tensor projected = matmul(tape, hidden, weight);
  const Tensor bilinear = matmul(tape, projected, transpose(tape, hidden));
  return tanh(tape, add(tape, bilinear, bias));
}

Tensor sample_channel_mask(std::size_t n, double keep_prob, Rng& rng, bool training) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ArgumentError("channel keep probability must lie in (0, 1], got " +
                        std::to_string(keep_prob));
  }
  if (!training) return Tensor::full({n, n}, keep_prob);
  std::bernoulli_distribution keep(keep_prob);
  std::vector<double> values(n * n);
  for (double& v : values) v = keep(rng) ? 1.0 : 0.0;
  return Tensor::matrix(n, n, std::move(values));
}

Tensor scalar_attention(Tape& tape, const Tensor& association, const Tensor& mask,
                        const std::vector<bool>& pad_mask, SumAxis axis) {
  if (association.rank() != 2 || association.dim(0) != association.dim(1) ||
      mask.shape() != association.shape() || pad_mask.size() != association.dim(0)) {
    throw DimensionError("scalar_attention: M " + shape_str(association.shape()) + ", V " +
                         shape_str(mask.shape()) + ", pad mask of length " +
                         std::to_string(pad_mask.size()));
  }
  const std::size_t n = pad_mask.size();
  const Tensor masked = mul(tape, association, mask);
  const Tensor summed = sum(tape, masked, axis == SumAxis::column ? 0 : 1);
  std::vector<double> pad_scores(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    if (pad_mask[k]) pad_scores[k] = kPadSentinel;
  const Tensor scores = add(tape, summed, Tensor::vector(std::move(pad_scores)));
  return softmax_stable(tape, scores);
}

Tensor vectorial_attention(Tape& tape, const Tensor& hidden, const VectorialAttentionParams& p) {
  if (hidden.rank() != 2 || p.hidden_weight.rank() != 2 ||
      p.hidden_weight.dim(1) != hidden.dim(1) || p.hidden_bias.rank() != 1 ||
      p.hidden_bias.dim(0) != p.hidden_weight.dim(0) ||
      p.score_weight.shape() != Shape{p.hidden_weight.dim(0), hidden.dim(1)}) {
    throw DimensionError("vectorial_attention: H " + shape_str(hidden.shape()) + ", W2 " +
                         shape_str(p.hidden_weight.shape()) + ", b " +
                         shape_str(p.hidden_bias.shape()) + ", W1 " +
                         shape_str(p.score_weight.shape()));
  }
  // [n x 2d] x [2d x a] -> [n x a]
  const Tensor projected =
      matmul(tape, hidden, transpose(tape, p.hidden_weight));
  const Tensor activated = sigmoid(tape, add_row_vector(tape, projected, p.hidden_bias));
  // [n x a] x [a x 2d] -> one score per position and dimension
  const Tensor scores = matmul(tape, activated, p.score_weight);
  return softmax(tape, scores, 0);
}

Tensor build_channel(Tape& tape, const Tensor& hidden, const Tensor& scalar_weights,
                     const Tensor& vector_weights, AttentionMode mode) {
  const bool needs_scalar = mode != AttentionMode::vectorial;
  const bool needs_vector = mode != AttentionMode::scalar;
  if (needs_scalar && !scalar_weights.defined()) {
    throw ArgumentError("build_channel: " + to_string(mode) + " mode needs scalar weights");
  }
  if (needs_vector && !vector_weights.defined()) {
    throw ArgumentError("build_channel: " + to_string(mode) + " mode needs vectorial weights");
  }
  Tensor channel = hidden;
  if (needs_vector) {
    if (vector_weights.shape() != hidden.shape()) {
      throw DimensionError("build_channel: vectorial weights " +
                           shape_str(vector_weights.shape()) + " vs H " +
                           shape_str(hidden.shape()));
    }
    channel = mul(tape, vector_weights, channel);
  }
  if (needs_scalar) channel = scale_rows(tape, channel, scalar_weights);
  return channel;
}

ChannelSet build_channels(Tape& tape, const Tensor& hidden, const std::vector<bool>& pad_mask,
                          std::span<const ChannelParams> params, AttentionMode mode,
                          SumAxis axis, SeedStream rng, bool training) {
  if (params.empty()) throw ArgumentError("build_channels: need at least one channel");
  const std::size_t n = hidden.dim(0);
  ChannelSet out;
  for (std::size_t l = 0; l < params.size(); ++l) {
    const ChannelParams& p = params[l];
    Tensor scalar_weights;
    Tensor vector_weights;
    if (mode != AttentionMode::vectorial) {
      auto engine = rng.child(l).engine();
      const Tensor mask = sample_channel_mask(n, p.scalar.keep_prob, engine, training);
      const Tensor assoc = association_matrix(tape, hidden, p.scalar.weight, p.scalar.bias);
      scalar_weights = scalar_attention(tape, assoc, mask, pad_mask, axis);
    }
    if (mode != AttentionMode::scalar) vector_weights = vectorial_attention(tape, hidden, p.vectorial);
    out.channels.push_back(build_channel(tape, hidden, scalar_weights, vector_weights, mode));
    out.scalar_weights.push_back(scalar_weights);
  }
  return out;
}

}  // namespace amcnn
