#include "amcnn/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "amcnn/errors.hpp"

namespace amcnn {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape.empty() || shape.size() > 3) {
    throw DimensionError("tensor rank must be 1..3, got shape " + shape_str(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_str(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->values = std::make_shared<std::vector<double>>(std::move(values));
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->values->size(), 0.0);
  node_ = std::move(node);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

double Tensor::item() const {
  if (size() != 1) {
    throw ArgumentError("item() on tensor of shape " + shape_str(shape()));
  }
  return (*node_->values)[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw DimensionError("at(row, col) needs a matrix, got " + shape_str(shape()));
  return (*node_->values)[row * node_->shape[1] + col];
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  return Tensor(node_->shape, *node_->values, false);
}

Tensor Tensor::alias(bool requires_grad) const {
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = node_->shape;
  node->values = node_->values;
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->values->size(), 0.0);
  return Tensor(std::move(node));
}

bool Tensor::shares_values_with(const Tensor& other) const {
  return defined() && other.defined() && node_->values == other.node_->values;
}

void Tape::record(BackwardFn fn) {
  if (recording_) entries_.push_back(std::move(fn));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ArgumentError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) {
    throw ArgumentError("backward() on a loss that does not depend on any requires_grad tensor");
  }
  loss.node()->grad[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
}

}  // namespace amcnn
