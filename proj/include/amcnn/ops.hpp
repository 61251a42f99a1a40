#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "amcnn/tensor.hpp"

// Differentiable operations. Each takes the tape it records onto; nothing
// is recorded when no input requires a gradient or the tape is not
// recording.

namespace amcnn {

enum class Unary { tanh, sigmoid, relu };
enum class Binary { add, mul };

/// Elementwise unary op. relu uses subgradient 0 at exactly 0.
Tensor ewise(Tape& tape, Unary op, const Tensor& x);
/// Elementwise binary op. Operands share a shape, or one has a single element.
Tensor ewise(Tape& tape, Binary op, const Tensor& a, const Tensor& b);

inline Tensor tanh(Tape& tape, const Tensor& x) { return ewise(tape, Unary::tanh, x); }
inline Tensor sigmoid(Tape& tape, const Tensor& x) { return ewise(tape, Unary::sigmoid, x); }
inline Tensor relu(Tape& tape, const Tensor& x) { return ewise(tape, Unary::relu, x); }
inline Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return ewise(tape, Binary::add, a, b);
}
inline Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return ewise(tape, Binary::mul, a, b);
}

Tensor scale(Tape& tape, const Tensor& x, double factor);

/// [m x k] * [k x n] -> [m x n]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
/// [m x k] * [k] -> [m]
Tensor matvec(Tape& tape, const Tensor& w, const Tensor& x);
Tensor transpose(Tape& tape, const Tensor& a);

/// Adds vector b[n] to every row of x[m x n].
Tensor add_row_vector(Tape& tape, const Tensor& x, const Tensor& b);
/// Multiplies row i of x[m x n] by w[i].
Tensor scale_rows(Tape& tape, const Tensor& x, const Tensor& w);

/// Max-shifted softmax. For a vector axis must be 0; for a matrix axis 0
/// normalizes each column and axis 1 each row.
Tensor softmax(Tape& tape, const Tensor& x, std::size_t axis);
inline Tensor softmax_stable(Tape& tape, const Tensor& scores) { return softmax(tape, scores, 0); }

Tensor concat(Tape& tape, const Tensor& a, const Tensor& b, std::size_t axis);
Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis);
/// Half-open range [begin, end) along axis.
Tensor slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
/// Row i of a matrix as a vector.
Tensor row(Tape& tape, const Tensor& x, std::size_t i);
/// Stacks equal-length vectors as the rows of a matrix.
Tensor stack_rows(Tape& tape, std::span<const Tensor> rows);

/// Sum of all elements, shape [1].
Tensor sum(Tape& tape, const Tensor& x);
/// Sum of a matrix over one axis: axis 0 gives column sums, axis 1 row sums.
Tensor sum(Tape& tape, const Tensor& x, std::size_t axis);

/// Maximum over axis 0: a vector reduces to [1], a matrix to per-column
/// maxima. Backward routes to the first argmax.
Tensor max_over_rows(Tape& tape, const Tensor& x);

/// Sliding windows of `width` consecutive rows of x[n x c], each flattened
/// row-major into one row of the [(n - width + 1) x (width * c)] result.
Tensor unfold_rows(Tape& tape, const Tensor& x, std::size_t width);

/// -log(max(probs[label], 1e-12)), shape [1].
Tensor cross_entropy(Tape& tape, const Tensor& probs, std::size_t label);

}  // namespace amcnn
