#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace amcnn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

// Values live behind their own shared_ptr so that several leaves can read
// the same parameter storage while accumulating into separate gradients.
struct TensorNode {
  Shape shape;
  std::shared_ptr<std::vector<double>> values;
  std::vector<double> grad;  // sized iff requires_grad
  bool requires_grad = false;
};

}  // namespace detail

/// Dense row-major array of doubles with 1 to 3 axes.
///
/// Tensor is a handle: copies share the underlying node. A default
/// constructed Tensor is undefined and only useful as an "absent" marker.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->values->size(); }

  std::span<const double> values() const { return *node_->values; }
  /// In-place access for optimizers and gradient checks. Every alias
  /// sharing this storage observes the change.
  std::span<double> mutable_values() { return *node_->values; }
  double item() const;
  double operator[](std::size_t i) const { return (*node_->values)[i]; }
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return node_->requires_grad; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  /// Deep copy with no gradient.
  Tensor clone() const;
  /// Leaf sharing this tensor's values with a fresh gradient buffer
  /// (or none when requires_grad is false).
  Tensor alias(bool requires_grad) const;
  bool shares_values_with(const Tensor& other) const;

  const std::shared_ptr<detail::TensorNode>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

/// Ordered record of differentiable operations.
///
/// Ops append a backward closure whenever their output requires a
/// gradient. backward() replays the closures newest first.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return entries_.size(); }
  void record(BackwardFn fn);
  void clear() { entries_.clear(); }

  /// Seeds d(loss)/d(loss) = 1 and accumulates into every reachable
  /// requires_grad tensor.
  void backward(const Tensor& loss);

 private:
  bool recording_;
  std::vector<BackwardFn> entries_;
};

inline void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

}  // namespace amcnn
