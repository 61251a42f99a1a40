#include "amcnn/conv.hpp"

#include "amcnn/errors.hpp"
#include "amcnn/ops.hpp"

namespace amcnn {

Tensor conv_forward(Tape& tape, const std::vector<Tensor>& channels, const ConvBank& bank) {
  if (channels.empty()) throw ArgumentError("conv_forward: no channels");
  const Shape& shape = channels.front().shape();
  for (const auto& c : channels) {
    if (c.shape() != shape || c.rank() != 2) {
      throw DimensionError("conv_forward: channel shapes differ (" + shape_str(c.shape()) +
                           " vs " + shape_str(shape) + ")");
    }
  }
  const std::size_t n = shape[0];
  if (bank.width < 1 || bank.width > n) {
    throw ConfigError("filter width " + std::to_string(bank.width) +
                      " does not fit a sentence of length " + std::to_string(n));
  }
  const std::size_t span_len = bank.width * channels.size() * shape[1];
  if (bank.weights.rank() != 2 || bank.weights.dim(1) != span_len ||
      bank.bias.rank() != 1 || bank.bias.dim(0) != bank.weights.dim(0)) {
    throw DimensionError("conv_forward: filter bank " + shape_str(bank.weights.shape()) +
                         " / bias " + shape_str(bank.bias.shape()) + " expects windows of " +
                         std::to_string(span_len));
  }
  // Position-major layout: row i holds [C_1[i], ..., C_L[i]].
  const Tensor stacked = channels.size() == 1 ? channels.front() : concat(tape, channels, 1);
  const Tensor windows = unfold_rows(tape, stacked, bank.width);
  const Tensor responses = matmul(tape, windows, transpose(tape, bank.weights));
  return relu(tape, add_row_vector(tape, responses, bank.bias));
}

Tensor max_pool(Tape& tape, const Tensor& feature_maps) {
  return max_over_rows(tape, feature_maps);
}

Tensor classify(Tape& tape, const Tensor& features, const ClassifierHead& head) {
  if (features.rank() != 1 || head.weight.rank() != 2 || head.weight.dim(1) != features.dim(0) ||
      head.bias.rank() != 1 || head.bias.dim(0) != head.weight.dim(0)) {
    throw DimensionError("classify: features " + shape_str(features.shape()) + ", W " +
                         shape_str(head.weight.shape()) + ", b " + shape_str(head.bias.shape()));
  }
  return softmax_stable(tape, add(tape, matvec(tape, head.weight, features), head.bias));
}

}  // namespace amcnn
