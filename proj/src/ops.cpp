#include "amcnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>

#include "amcnn/errors.hpp"

namespace amcnn {
namespace {

using NodePtr = std::shared_ptr<detail::TensorNode>;

bool wants_grad(const Tape& tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape.recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ArgumentError(std::string(op) + ": undefined operand");
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  require_defined(t, op);
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_str(t.shape()));
  }
}

std::vector<double>& grad_of(const NodePtr& n) { return n->grad; }
const std::vector<double>& vals(const NodePtr& n) { return *n->values; }

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Row-major product helpers; all accumulate into `out`.
void gemm_nn(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* out_row = out + i * n;
    const double* a_row = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a_row[p];
      if (av == 0.0) continue;
      const double* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += av * b_row[j];
    }
  }
}

// out[m x k] += g[m x n] * b[k x n]^T
void gemm_nt(const double* g, const double* b, double* out, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* g_row = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* b_row = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += g_row[j] * b_row[j];
      out[i * k + p] += acc;
    }
  }
}

// out[k x n] += a[m x k]^T * g[m x n]
void gemm_tn(const double* a, const double* g, double* out, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* g_row = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* out_row = out + p * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += av * g_row[j];
    }
  }
}

// Splits a shape around `axis` into (outer, axis length, inner).
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor ewise(Tape& tape, Unary op, const Tensor& x) {
  require_defined(x, "ewise");
  const auto& in = x.values();
  std::vector<double> out(in.size());
  switch (op) {
    case Unary::tanh:
      std::transform(in.begin(), in.end(), out.begin(), [](double v) { return std::tanh(v); });
      break;
    case Unary::sigmoid:
      std::transform(in.begin(), in.end(), out.begin(), sigmoid_value);
      break;
    case Unary::relu:
      std::transform(in.begin(), in.end(), out.begin(),
                     [](double v) { return v > 0.0 ? v : 0.0; });
      break;
  }
  const bool rg = wants_grad(tape, {&x});
  Tensor y(x.shape(), std::move(out), rg);
  if (rg) {
    tape.record([op, xn = x.node(), yn = y.node()] {
      const auto& yv = vals(yn);
      const auto& xv = vals(xn);
      const auto& gy = grad_of(yn);
      auto& gx = grad_of(xn);
      for (std::size_t i = 0; i < gx.size(); ++i) {
        double d = 0.0;
        switch (op) {
          case Unary::tanh: d = 1.0 - yv[i] * yv[i]; break;
          case Unary::sigmoid: d = yv[i] * (1.0 - yv[i]); break;
          case Unary::relu: d = xv[i] > 0.0 ? 1.0 : 0.0; break;
        }
        gx[i] += gy[i] * d;
      }
    });
  }
  return y;
}

Tensor ewise(Tape& tape, Binary op, const Tensor& a, const Tensor& b) {
  require_defined(a, "ewise");
  require_defined(b, "ewise");
  const bool same = a.shape() == b.shape();
  if (!same && a.size() != 1 && b.size() != 1) {
    throw DimensionError("ewise: shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const Shape out_shape = (same || b.size() == 1) ? a.shape() : b.shape();
  const std::size_t n = shape_numel(out_shape);
  const std::size_t a_step = a.size() == n ? 1 : 0;
  const std::size_t b_step = b.size() == n ? 1 : 0;
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[i * a_step];
    const double y = bv[i * b_step];
    out[i] = op == Binary::add ? x + y : x * y;
  }
  const bool rg = wants_grad(tape, {&a, &b});
  Tensor result(out_shape, std::move(out), rg);
  if (rg) {
    tape.record([op, an = a.node(), bn = b.node(), rn = result.node(), a_step, b_step] {
      const auto& g = grad_of(rn);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (an->requires_grad) {
          an->grad[i * a_step] += op == Binary::add ? g[i] : g[i] * vals(bn)[i * b_step];
        }
        if (bn->requires_grad) {
          bn->grad[i * b_step] += op == Binary::add ? g[i] : g[i] * vals(an)[i * a_step];
        }
      }
    });
  }
  return result;
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
  require_defined(x, "scale");
  std::vector<double> out(x.values().begin(), x.values().end());
  for (double& v : out) v *= factor;
  const bool rg = wants_grad(tape, {&x});
  Tensor y(x.shape(), std::move(out), rg);
  if (rg) {
    tape.record([factor, xn = x.node(), yn = y.node()] {
      for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += factor * yn->grad[i];
    });
  }
  return y;
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
  const bool rg = wants_grad(tape, {&a, &b});
  Tensor c({m, n}, std::move(out), rg);
  if (rg) {
    tape.record([an = a.node(), bn = b.node(), cn = c.node(), m, k, n] {
      const double* g = cn->grad.data();
      if (an->requires_grad) gemm_nt(g, vals(bn).data(), an->grad.data(), m, k, n);
      if (bn->requires_grad) gemm_tn(vals(an).data(), g, bn->grad.data(), m, k, n);
    });
  }
  return c;
}

Tensor matvec(Tape& tape, const Tensor& w, const Tensor& x) {
  require_rank(w, 2, "matvec");
  require_rank(x, 1, "matvec");
  const std::size_t m = w.dim(0), k = w.dim(1);
  if (x.dim(0) != k) {
    throw DimensionError("matvec: " + shape_str(w.shape()) + " x " + shape_str(x.shape()));
  }
  const auto wv = w.values();
  const auto xv = x.values();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* row = wv.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) acc += row[p] * xv[p];
    out[i] = acc;
  }
  const bool rg = wants_grad(tape, {&w, &x});
  Tensor y({m}, std::move(out), rg);
  if (rg) {
    tape.record([wn = w.node(), xn = x.node(), yn = y.node(), m, k] {
      const auto& gy = yn->grad;
      const auto& wv = vals(wn);
      const auto& xv = vals(xn);
      for (std::size_t i = 0; i < m; ++i) {
        const double g = gy[i];
        if (g == 0.0) continue;
        if (wn->requires_grad) {
          double* gw = wn->grad.data() + i * k;
          for (std::size_t p = 0; p < k; ++p) gw[p] += g * xv[p];
        }
        if (xn->requires_grad) {
          const double* row = wv.data() + i * k;
          for (std::size_t p = 0; p < k; ++p) xn->grad[p] += g * row[p];
        }
      }
    });
  }
  return y;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  const auto av = a.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  const bool rg = wants_grad(tape, {&a});
  Tensor t({n, m}, std::move(out), rg);
  if (rg) {
    tape.record([an = a.node(), tn = t.node(), m, n] {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += tn->grad[j * m + i];
    });
  }
  return t;
}

Tensor add_row_vector(Tape& tape, const Tensor& x, const Tensor& b) {
  require_rank(x, 2, "add_row_vector");
  require_rank(b, 1, "add_row_vector");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (b.dim(0) != n) {
    throw DimensionError("add_row_vector: " + shape_str(x.shape()) + " + " +
                         shape_str(b.shape()));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  const bool rg = wants_grad(tape, {&x, &b});
  Tensor y({m, n}, std::move(out), rg);
  if (rg) {
    tape.record([xn = x.node(), bn = b.node(), yn = y.node(), m, n] {
      const auto& g = yn->grad;
      if (xn->requires_grad)
        for (std::size_t i = 0; i < m * n; ++i) xn->grad[i] += g[i];
      if (bn->requires_grad)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) bn->grad[j] += g[i * n + j];
    });
  }
  return y;
}

Tensor scale_rows(Tape& tape, const Tensor& x, const Tensor& w) {
  require_rank(x, 2, "scale_rows");
  require_rank(w, 1, "scale_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (w.dim(0) != m) {
    throw DimensionError("scale_rows: " + shape_str(x.shape()) + " rows vs weights " +
                         shape_str(w.shape()));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto wv = w.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] *= wv[i];
  const bool rg = wants_grad(tape, {&x, &w});
  Tensor y({m, n}, std::move(out), rg);
  if (rg) {
    tape.record([xn = x.node(), wn = w.node(), yn = y.node(), m, n] {
      const auto& g = yn->grad;
      const auto& xv = vals(xn);
      const auto& wv = vals(wn);
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = i * n + j;
          if (xn->requires_grad) xn->grad[idx] += g[idx] * wv[i];
          acc += g[idx] * xv[idx];
        }
        if (wn->requires_grad) wn->grad[i] += acc;
      }
    });
  }
  return y;
}

Tensor softmax(Tape& tape, const Tensor& x, std::size_t axis) {
  require_defined(x, "softmax");
  if (x.size() == 0) throw ArgumentError("softmax: empty input");
  if (x.rank() > 2 || axis >= x.rank()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_str(x.shape()));
  }
  // Each group is `length` elements spaced `stride` apart.
  std::size_t groups = 1, length = x.dim(0), stride = 1, group_step = 0;
  if (x.rank() == 2) {
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (axis == 0) {
      groups = cols, length = rows, stride = cols, group_step = 1;
    } else {
      groups = rows, length = cols, stride = 1, group_step = cols;
    }
  }
  const auto xv = x.values();
  std::vector<double> out(x.size());
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = g * group_step;
    double mx = xv[base];
    for (std::size_t i = 1; i < length; ++i) mx = std::max(mx, xv[base + i * stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < length; ++i) {
      const double e = std::exp(xv[base + i * stride] - mx);
      out[base + i * stride] = e;
      total += e;
    }
    for (std::size_t i = 0; i < length; ++i) out[base + i * stride] /= total;
  }
  const bool rg = wants_grad(tape, {&x});
  Tensor y(x.shape(), std::move(out), rg);
  if (rg) {
    tape.record([xn = x.node(), yn = y.node(), groups, length, stride, group_step] {
      const auto& yv = vals(yn);
      const auto& gy = yn->grad;
      for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t base = g * group_step;
        double dot = 0.0;
        for (std::size_t i = 0; i < length; ++i) {
          const std::size_t idx = base + i * stride;
          dot += yv[idx] * gy[idx];
        }
        for (std::size_t i = 0; i < length; ++i) {
          const std::size_t idx = base + i * stride;
          xn->grad[idx] += yv[idx] * (gy[idx] - dot);
        }
      }
    });
  }
  return y;
}

Tensor concat(Tape& tape, const Tensor& a, const Tensor& b, std::size_t axis) {
  const Tensor parts[] = {a, b};
  return concat(tape, parts, axis);
}

Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ArgumentError("concat: no operands");
  for (const auto& p : parts) require_defined(p, "concat");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_str(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) {
      throw DimensionError("concat: shape " + shape_str(s) + " incompatible with " +
                           shape_str(first) + " along axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit out_split = split_at(out_shape, axis);
  const std::size_t out_chunk = out_split.length * out_split.inner;
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t chunk = p.size() / out_split.outer;
    const auto pv = p.values();
    for (std::size_t o = 0; o < out_split.outer; ++o)
      std::copy_n(pv.data() + o * chunk, chunk, out.data() + o * out_chunk + offset);
    offset += chunk;
  }
  bool rg = false;
  if (tape.recording())
    for (const auto& p : parts) rg = rg || p.requires_grad();
  Tensor y(out_shape, std::move(out), rg);
  if (rg) {
    std::vector<NodePtr> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    tape.record([nodes = std::move(nodes), offsets = std::move(offsets), yn = y.node(),
                 outer = out_split.outer, out_chunk] {
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (!nodes[k]->requires_grad) continue;
        const std::size_t chunk = nodes[k]->grad.size() / outer;
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < chunk; ++i)
            nodes[k]->grad[o * chunk + i] += yn->grad[o * out_chunk + offsets[k] + i];
      }
    });
  }
  return y;
}

Tensor slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  require_defined(x, "slice");
  if (axis >= x.rank() || begin >= end || end > x.dim(axis)) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " of " + shape_str(x.shape()));
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t in_chunk = s.length * s.inner;
  const std::size_t out_chunk = (end - begin) * s.inner;
  const std::size_t skip = begin * s.inner;
  const auto xv = x.values();
  std::vector<double> out(s.outer * out_chunk);
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(xv.data() + o * in_chunk + skip, out_chunk, out.data() + o * out_chunk);
  const bool rg = wants_grad(tape, {&x});
  Tensor y(out_shape, std::move(out), rg);
  if (rg) {
    tape.record([xn = x.node(), yn = y.node(), outer = s.outer, in_chunk, out_chunk, skip] {
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < out_chunk; ++i)
          xn->grad[o * in_chunk + skip + i] += yn->grad[o * out_chunk + i];
    });
  }
  return y;
}

Tensor row(Tape& tape, const Tensor& x, std::size_t i) {
  require_rank(x, 2, "row");
  if (i >= x.dim(0)) {
    throw DimensionError("row: index " + std::to_string(i) + " outside " + shape_str(x.shape()));
  }
  const std::size_t n = x.dim(1);
  const auto xv = x.values();
  std::vector<double> out(xv.begin() + i * n, xv.begin() + (i + 1) * n);
  const bool rg = wants_grad(tape, {&x});
  Tensor y({n}, std::move(out), rg);
  if (rg) {
    tape.record([xn = x.node(), yn = y.node(), i, n] {
      for (std::size_t j = 0; j < n; ++j) xn->grad[i * n + j] += yn->grad[j];
    });
  }
  return y;
}

Tensor stack_rows(Tape& tape, std::span<const Tensor> rows) {
  if (rows.empty()) throw ArgumentError("stack_rows: no rows");
  for (const auto& r : rows) {
    require_rank(r, 1, "stack_rows");
    if (r.dim(0) != rows[0].dim(0)) {
      throw DimensionError("stack_rows: row " + shape_str(r.shape()) + " vs " +
                           shape_str(rows[0].shape()));
    }
  }
  const std::size_t n = rows[0].dim(0);
  std::vector<double> out;
  out.reserve(rows.size() * n);
  bool rg = false;
  for (const auto& r : rows) {
    out.insert(out.end(), r.values().begin(), r.values().end());
    rg = rg || r.requires_grad();
  }
  rg = rg && tape.recording();
  Tensor y({rows.size(), n}, std::move(out), rg);
  if (rg) {
    std::vector<NodePtr> nodes;
    for (const auto& r : rows) nodes.push_back(r.node());
    tape.record([nodes = std::move(nodes), yn = y.node(), n] {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!nodes[i]->requires_grad) continue;
        for (std::size_t j = 0; j < n; ++j) nodes[i]->grad[j] += yn->grad[i * n + j];
      }
    });
  }
  return y;
}

Tensor sum(Tape& tape, const Tensor& x) {
  require_defined(x, "sum");
  double total = 0.0;
  for (double v : x.values()) total += v;
  const bool rg = wants_grad(tape, {&x});
  Tensor y({1}, {total}, rg);
  if (rg) {
    tape.record([xn = x.node(), yn = y.node()] {
      const double g = yn->grad[0];
      for (double& gx : xn->grad) gx += g;
    });
  }
  return y;
}

Tensor sum(Tape& tape, const Tensor& x, std::size_t axis) {
  require_rank(x, 2, "sum");
  if (axis > 1) throw DimensionError("sum: axis must be 0 or 1 for a matrix");
  const std::size_t m = x.dim(0), n = x.dim(1);
  const auto xv = x.values();
  std::vector<double> out(axis == 0 ? n : m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[axis == 0 ? j : i] += xv[i * n + j];
  const bool rg = wants_grad(tape, {&x});
  const std::size_t count = out.size();
  Tensor y({count}, std::move(out), rg);
  if (rg) {
    tape.record([xn = x.node(), yn = y.node(), axis, m, n] {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) xn->grad[i * n + j] += yn->grad[axis == 0 ? j : i];
    });
  }
  return y;
}

Tensor max_over_rows(Tape& tape, const Tensor& x) {
  require_defined(x, "max_over_rows");
  if (x.size() == 0) throw ArgumentError("max_over_rows: empty input");
  if (x.rank() > 2) throw DimensionError("max_over_rows: rank > 2");
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.rank() == 2 ? x.dim(1) : 1;
  const auto xv = x.values();
  std::vector<double> out(cols);
  std::vector<std::size_t> argmax(cols, 0);
  for (std::size_t j = 0; j < cols; ++j) {
    double best = xv[j];
    for (std::size_t i = 1; i < rows; ++i) {
      if (xv[i * cols + j] > best) {
        best = xv[i * cols + j];
        argmax[j] = i;
      }
    }
    out[j] = best;
  }
  const bool rg = wants_grad(tape, {&x});
  Tensor y({cols}, std::move(out), rg);
  if (rg) {
    tape.record([xn = x.node(), yn = y.node(), argmax = std::move(argmax), cols] {
      for (std::size_t j = 0; j < cols; ++j) xn->grad[argmax[j] * cols + j] += yn->grad[j];
    });
  }
  return y;
}

Tensor unfold_rows(Tape& tape, const Tensor& x, std::size_t width) {
  require_rank(x, 2, "unfold_rows");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (width < 1 || width > n) {
    throw DimensionError("unfold_rows: window width " + std::to_string(width) +
                         " does not fit " + std::to_string(n) + " rows");
  }
  const std::size_t windows = n - width + 1;
  const std::size_t span_len = width * c;
  const auto xv = x.values();
  std::vector<double> out(windows * span_len);
  for (std::size_t w = 0; w < windows; ++w)
    std::copy_n(xv.data() + w * c, span_len, out.data() + w * span_len);
  const bool rg = wants_grad(tape, {&x});
  Tensor y({windows, span_len}, std::move(out), rg);
  if (rg) {
    tape.record([xn = x.node(), yn = y.node(), windows, span_len, c] {
      for (std::size_t w = 0; w < windows; ++w)
        for (std::size_t i = 0; i < span_len; ++i)
          xn->grad[w * c + i] += yn->grad[w * span_len + i];
    });
  }
  return y;
}

Tensor cross_entropy(Tape& tape, const Tensor& probs, std::size_t label) {
  require_rank(probs, 1, "cross_entropy");
  if (label >= probs.dim(0)) {
    throw ArgumentError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                        std::to_string(probs.dim(0)) + ")");
  }
  constexpr double kFloor = 1e-12;
  const double p = probs[label];
  const double clamped = std::max(p, kFloor);
  const bool rg = wants_grad(tape, {&probs});
  Tensor loss({1}, {-std::log(clamped)}, rg);
  if (rg) {
    tape.record([pn = probs.node(), ln = loss.node(), label, p] {
      if (p >= kFloor) pn->grad[label] += -ln->grad[0] / p;
    });
  }
  return loss;
}

}  // namespace amcnn
