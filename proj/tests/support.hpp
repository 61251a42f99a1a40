#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "amcnn/ops.hpp"
#include "amcnn/tensor.hpp"

namespace amcnn::test {

inline std::mt19937_64 engine(std::uint64_t seed) { return std::mt19937_64(seed); }

inline std::vector<double> uniform(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                   double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, bool requires_grad = false,
                            double lo = -1.0, double hi = 1.0) {
  return Tensor(shape, uniform(shape_numel(shape), rng, lo, hi), requires_grad);
}

inline std::size_t random_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Plain triple loop, row-major.
inline std::vector<double> naive_matmul(std::span<const double> a, std::span<const double> b,
                                        std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += a[i * k + t] * b[t * n + j];
      c[i * n + j] = s;
    }
  return c;
}

inline double naive_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::vector<double> naive_softmax(std::vector<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (double& x : v) z += (x = std::exp(x - m));
  for (double& x : v) x /= z;
  return v;
}

// Worst |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over every
// element of every leaf, by central differences written independently of
// the library's checker.
inline double fd_max_rel_error(std::vector<Tensor> leaves,
                               const std::function<Tensor(Tape&)>& fn, double eps = 1e-5) {
  for (auto& l : leaves) l.zero_grad();
  {
    Tape tape;
    tape.backward(fn(tape));
  }
  double worst = 0.0;
  for (auto& leaf : leaves) {
    auto values = leaf.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      Tape off(false);
      values[i] = saved + eps;
      const double up = fn(off).item();
      values[i] = saved - eps;
      const double down = fn(off).item();
      values[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = leaf.grad()[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::isnan(rel) ? INFINITY : rel);
    }
  }
  return worst;
}

// sum(out * w) for fixed random w, so every output element gets a distinct
// upstream gradient.
inline Tensor weighted_sum(Tape& tape, const Tensor& out, std::uint64_t seed = 99) {
  auto rng = engine(seed);
  const Tensor w(out.shape(), uniform(out.size(), rng, 0.5, 1.5));
  return sum(tape, mul(tape, out, w));
}

}  // namespace amcnn::test
