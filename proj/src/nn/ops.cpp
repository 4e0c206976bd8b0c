// SPDX-License-Identifier: Apache-2.0
#include "pdr/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "pdr/error.hpp"

namespace pdr::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;

// Eigen chooses between scalar and packet kernels from pointer alignment,
// which would make the low bits of a result depend on heap layout. Every
// Eigen expression therefore runs on owned, aligned copies.
RowMatrix owned(const double* data, std::size_t rows, std::size_t cols) {
  return ConstMap(data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void accumulate(std::span<double> dst, const RowMatrix& src) {
  const double* p = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += p[i];
}

using NodePtr = std::shared_ptr<TensorNode>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

std::size_t last_dim(const Tensor& x) { return x.shape().back(); }

Shape with_last(Shape s, std::size_t last) {
  s.back() = last;
  return s;
}

template <class Fn, class Deriv>
Tensor unary(const Tensor& x, Fn fn, Deriv deriv) {
  std::vector<double> out(x.numel());
  const auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(in[i]);
  NodePtr xn = x.node();
  const Tensor inputs[] = {x};
  return make_result(x.shape(), std::move(out), inputs,
                     [xn, deriv](std::span<const double> g, std::span<const std::span<double>> gi) {
                       auto& gx = gi[0];
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xn->value[i]);
                     });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() != 2) {
    throw DimensionError("matmul: expected [..., m, k] x [k, n], got " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  }
  const std::size_t k = last_dim(a);
  if (k != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  const std::size_t rows = a.numel() / k;
  const std::size_t n = b.dim(1);
  std::vector<double> out(rows * n);
  {
    RowMatrix C(rows, n);
    C.noalias() = owned(a.values().data(), rows, k) * owned(b.values().data(), k, n);
    std::copy_n(C.data(), out.size(), out.begin());
  }

  NodePtr an = a.node(), bn = b.node();
  const Tensor inputs[] = {a, b};
  return make_result(with_last(a.shape(), n), std::move(out), inputs,
                     [an, bn, rows, k, n](std::span<const double> g, std::span<const std::span<double>> gi) {
                       const RowMatrix G = owned(g.data(), rows, n);
                       if (!gi[0].empty()) {
                         RowMatrix d(rows, k);
                         d.noalias() = G * owned(bn->value.data(), k, n).transpose();
                         accumulate(gi[0], d);
                       }
                       if (!gi[1].empty()) {
                         RowMatrix d(k, n);
                         d.noalias() = owned(an->value.data(), rows, k).transpose() * G;
                         accumulate(gi[1], d);
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  const Tensor inputs[] = {a, b};
  return make_result(a.shape(), std::move(out), inputs,
                     [](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (auto& gx : gi) {
                         if (gx.empty()) continue;
                         for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                       }
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  const Tensor inputs[] = {a, b};
  return make_result(a.shape(), std::move(out), inputs,
                     [](std::span<const double> g, std::span<const std::span<double>> gi) {
                       if (!gi[0].empty())
                         for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                       if (!gi[1].empty())
                         for (std::size_t i = 0; i < g.size(); ++i) gi[1][i] -= g[i];
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  NodePtr an = a.node(), bn = b.node();
  const Tensor inputs[] = {a, b};
  return make_result(a.shape(), std::move(out), inputs,
                     [an, bn](std::span<const double> g, std::span<const std::span<double>> gi) {
                       if (!gi[0].empty())
                         for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * bn->value[i];
                       if (!gi[1].empty())
                         for (std::size_t i = 0; i < g.size(); ++i) gi[1][i] += g[i] * an->value[i];
                     });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  const Tensor inputs[] = {a};
  return make_result(a.shape(), std::move(out), inputs,
                     [factor](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * factor;
                     });
}

Tensor bias_add(const Tensor& x, const Tensor& bias) {
  const std::size_t n = last_dim(x);
  if (bias.rank() != 1 || bias.dim(0) != n) {
    throw DimensionError("bias_add: bias " + shape_string(bias.shape()) + " does not match " +
                         shape_string(x.shape()));
  }
  const std::size_t rows = x.numel() / n;
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto b = bias.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] += b[j];
  const Tensor inputs[] = {x, bias};
  return make_result(x.shape(), std::move(out), inputs,
                     [rows, n](std::span<const double> g, std::span<const std::span<double>> gi) {
                       if (!gi[0].empty())
                         for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                       if (!gi[1].empty())
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < n; ++j) gi[1][j] += g[r * n + j];
                     });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; }, [](double v) { return v > 0 ? 1.0 : 0.0; });
}

namespace {

// Logistic function over a whole buffer; Eigen's exp is vectorized.
std::shared_ptr<std::vector<double>> logistic(std::span<const double> in) {
  Eigen::ArrayXd x = Eigen::Map<const Eigen::ArrayXd>(in.data(), static_cast<Eigen::Index>(in.size()));
  x = 1.0 / (1.0 + (-x).exp());
  return std::make_shared<std::vector<double>>(x.data(), x.data() + x.size());
}

}  // namespace

Tensor sigmoid(const Tensor& x) {
  auto s = logistic(x.values());
  std::vector<double> out = *s;
  const Tensor inputs[] = {x};
  return make_result(x.shape(), std::move(out), inputs,
                     [s](std::span<const double> g, std::span<const std::span<double>> gi) {
                       const auto& sv = *s;
                       for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * sv[i] * (1 - sv[i]);
                     });
}

Tensor swish(const Tensor& x) {
  const auto in = x.values();
  auto s = logistic(in);
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * (*s)[i];
  NodePtr xn = x.node();
  const Tensor inputs[] = {x};
  return make_result(x.shape(), std::move(out), inputs,
                     [xn, s](std::span<const double> g, std::span<const std::span<double>> gi) {
                       const auto& sv = *s;
                       const auto& v = xn->value;
                       for (std::size_t i = 0; i < g.size(); ++i)
                         gi[0][i] += g[i] * (sv[i] + v[i] * sv[i] * (1 - sv[i]));
                     });
}

Tensor softmax_lastdim(const Tensor& x) {
  const std::size_t n = last_dim(x);
  const std::size_t rows = x.numel() / n;
  auto out = std::make_shared<std::vector<double>>(x.numel());
  const auto in = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * n;
    double* o = out->data() + r * n;
    const double peak = *std::max_element(row, row + n);
    double total = 0;
    for (std::size_t j = 0; j < n; ++j) total += (o[j] = std::exp(row[j] - peak));
    for (std::size_t j = 0; j < n; ++j) o[j] /= total;
  }
  const Tensor inputs[] = {x};
  std::vector<double> value = *out;
  return make_result(x.shape(), std::move(value), inputs,
                     [out, rows, n](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* y = out->data() + r * n;
                         const double* gr = g.data() + r * n;
                         double dot = 0;
                         for (std::size_t j = 0; j < n; ++j) dot += gr[j] * y[j];
                         for (std::size_t j = 0; j < n; ++j) gi[0][r * n + j] += y[j] * (gr[j] - dot);
                       }
                     });
}

Tensor neighbor_softmax(const Tensor& scores, std::span<const std::uint8_t> real_mask) {
  if (scores.rank() != 3) {
    throw DimensionError("neighbor_softmax: expected [m, k, c], got " + shape_string(scores.shape()));
  }
  const std::size_t m = scores.dim(0), k = scores.dim(1), c = scores.dim(2);
  if (real_mask.size() != m * k) {
    throw DimensionError("neighbor_softmax: mask has " + std::to_string(real_mask.size()) +
                         " entries for " + shape_string(scores.shape()));
  }
  auto out = std::make_shared<std::vector<double>>(scores.numel(), 0.0);
  const auto s = scores.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j)
        if (real_mask[i * k + j]) peak = std::max(peak, s[(i * k + j) * c + ch]);
      if (peak == -std::numeric_limits<double>::infinity()) continue;
      double total = 0;
      for (std::size_t j = 0; j < k; ++j) {
        if (!real_mask[i * k + j]) continue;
        const auto idx = (i * k + j) * c + ch;
        total += ((*out)[idx] = std::exp(s[idx] - peak));
      }
      for (std::size_t j = 0; j < k; ++j)
        if (real_mask[i * k + j]) (*out)[(i * k + j) * c + ch] /= total;
    }
  }
  const Tensor inputs[] = {scores};
  std::vector<double> value = *out;
  return make_result(scores.shape(), std::move(value), inputs,
                     [out, m, k, c](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t i = 0; i < m; ++i) {
                         for (std::size_t ch = 0; ch < c; ++ch) {
                           double dot = 0;
                           for (std::size_t j = 0; j < k; ++j) {
                             const auto idx = (i * k + j) * c + ch;
                             dot += g[idx] * (*out)[idx];
                           }
                           for (std::size_t j = 0; j < k; ++j) {
                             const auto idx = (i * k + j) * c + ch;
                             gi[0][idx] += (*out)[idx] * (g[idx] - dot);
                           }
                         }
                       }
                     });
}

Tensor concat_lastdim(const Tensor& a, const Tensor& b) {
  const std::size_t na = last_dim(a), nb = last_dim(b);
  if (a.rank() != b.rank() || a.numel() / na != b.numel() / nb ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
    throw DimensionError("concat_lastdim: leading dimensions differ for " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  const std::size_t rows = a.numel() / na, w = na + nb;
  std::vector<double> out(rows * w);
  const auto av = a.values(), bv = b.values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data() + r * na, na, out.data() + r * w);
    std::copy_n(bv.data() + r * nb, nb, out.data() + r * w + na);
  }
  const Tensor inputs[] = {a, b};
  return make_result(with_last(a.shape(), w), std::move(out), inputs,
                     [rows, na, nb, w](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t r = 0; r < rows; ++r) {
                         if (!gi[0].empty())
                           for (std::size_t j = 0; j < na; ++j) gi[0][r * na + j] += g[r * w + j];
                         if (!gi[1].empty())
                           for (std::size_t j = 0; j < nb; ++j) gi[1][r * nb + j] += g[r * w + na + j];
                       }
                     });
}

Tensor slice_lastdim(const Tensor& x, std::size_t begin, std::size_t end) {
  const std::size_t n = last_dim(x);
  if (begin >= end || end > n) {
    throw DimensionError("slice_lastdim: invalid range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") for " + shape_string(x.shape()));
  }
  const std::size_t rows = x.numel() / n, w = end - begin;
  std::vector<double> out(rows * w);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.data() + r * n + begin, w, out.data() + r * w);
  const Tensor inputs[] = {x};
  return make_result(with_last(x.shape(), w), std::move(out), inputs,
                     [rows, n, w, begin](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t j = 0; j < w; ++j) gi[0][r * n + begin + j] += g[r * w + j];
                     });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.rank() != 2 || begin >= end || end > x.dim(0)) {
    throw DimensionError("slice_rows: invalid range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") for " + shape_string(x.shape()));
  }
  const std::size_t d = x.dim(1);
  const auto xv = x.values();
  std::vector<double> out(xv.begin() + begin * d, xv.begin() + end * d);
  const Tensor inputs[] = {x};
  return make_result({end - begin, d}, std::move(out), inputs,
                     [begin, d](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t i = 0; i < g.size(); ++i) gi[0][begin * d + i] += g[i];
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (element_count(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  const Tensor inputs[] = {x};
  return make_result(std::move(shape), std::move(out), inputs,
                     [](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                     });
}

Tensor max_lastdim(const Tensor& x) {
  const std::size_t n = last_dim(x);
  const std::size_t rows = x.numel() / n;
  std::vector<double> out(rows);
  std::vector<std::size_t> arg(rows);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * n;
    arg[r] = static_cast<std::size_t>(std::max_element(row, row + n) - row);  // first max
    out[r] = row[arg[r]];
  }
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  if (shape.empty()) shape = {1};
  const Tensor inputs[] = {x};
  return make_result(std::move(shape), std::move(out), inputs,
                     [arg = std::move(arg), n](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t r = 0; r < arg.size(); ++r) gi[0][r * n + arg[r]] += g[r];
                     });
}

Tensor max_rows(const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("max_rows: expected [n, c], got " + shape_string(x.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1);
  std::vector<double> out(x.values().begin(), x.values().begin() + c);
  std::vector<std::size_t> arg(c, 0);
  const auto xv = x.values();
  for (std::size_t r = 1; r < n; ++r)
    for (std::size_t j = 0; j < c; ++j)
      if (xv[r * c + j] > out[j]) {
        out[j] = xv[r * c + j];
        arg[j] = r;
      }
  const Tensor inputs[] = {x};
  return make_result({c}, std::move(out), inputs,
                     [arg = std::move(arg), c](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t j = 0; j < c; ++j) gi[0][arg[j] * c + j] += g[j];
                     });
}

Tensor weighted_sum(const Tensor& values, const Tensor& weights) {
  require_same_shape(values, weights, "weighted_sum");
  if (values.rank() != 3) {
    throw DimensionError("weighted_sum: expected [m, k, c], got " + shape_string(values.shape()));
  }
  const std::size_t m = values.dim(0), k = values.dim(1), c = values.dim(2);
  std::vector<double> out(m * c, 0.0);
  const auto v = values.values(), w = weights.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t ch = 0; ch < c; ++ch) out[i * c + ch] += v[(i * k + j) * c + ch] * w[(i * k + j) * c + ch];
  NodePtr vn = values.node(), wn = weights.node();
  const Tensor inputs[] = {values, weights};
  return make_result({m, c}, std::move(out), inputs,
                     [vn, wn, m, k, c](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < k; ++j)
                           for (std::size_t ch = 0; ch < c; ++ch) {
                             const auto idx = (i * k + j) * c + ch;
                             if (!gi[0].empty()) gi[0][idx] += g[i * c + ch] * wn->value[idx];
                             if (!gi[1].empty()) gi[1][idx] += g[i * c + ch] * vn->value[idx];
                           }
                     });
}

Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> index) {
  if (x.rank() != 2) throw DimensionError("gather_rows: expected [n, d], got " + shape_string(x.shape()));
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (index.empty()) throw DimensionError("gather_rows: empty index list");
  std::vector<double> out(index.size() * d, 0.0);
  const auto xv = x.values();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0) continue;
    if (static_cast<std::size_t>(index[i]) >= n) {
      throw std::logic_error("gather_rows: index " + std::to_string(index[i]) + " out of range for " +
                             std::to_string(n) + " rows");
    }
    std::copy_n(xv.data() + index[i] * d, d, out.data() + i * d);
  }
  std::vector<std::int64_t> idx(index.begin(), index.end());
  const Tensor inputs[] = {x};
  return make_result({index.size(), d}, std::move(out), inputs,
                     [idx = std::move(idx), d](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         if (idx[i] < 0) continue;
                         double* dst = gi[0].data() + idx[i] * d;
                         for (std::size_t j = 0; j < d; ++j) dst[j] += g[i * d + j];
                       }
                     });
}

Tensor repeat_neighbors(const Tensor& x, std::size_t k) {
  if (x.rank() != 2) throw DimensionError("repeat_neighbors: expected [m, c], got " + shape_string(x.shape()));
  if (k == 0) throw DimensionError("repeat_neighbors: k must be positive");
  const std::size_t m = x.dim(0), c = x.dim(1);
  std::vector<double> out(m * k * c);
  const auto xv = x.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) std::copy_n(xv.data() + i * c, c, out.data() + (i * k + j) * c);
  const Tensor inputs[] = {x};
  return make_result({m, k, c}, std::move(out), inputs,
                     [m, k, c](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < k; ++j)
                           for (std::size_t ch = 0; ch < c; ++ch) gi[0][i * c + ch] += g[(i * k + j) * c + ch];
                     });
}

Tensor tile_rows(const Tensor& v, std::size_t n) {
  if (v.rank() != 1) throw DimensionError("tile_rows: expected [c], got " + shape_string(v.shape()));
  if (n == 0) throw DimensionError("tile_rows: row count must be positive");
  const std::size_t c = v.dim(0);
  std::vector<double> out(n * c);
  for (std::size_t r = 0; r < n; ++r) std::copy_n(v.values().data(), c, out.data() + r * c);
  const Tensor inputs[] = {v};
  return make_result({n, c}, std::move(out), inputs,
                     [n, c](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t r = 0; r < n; ++r)
                         for (std::size_t j = 0; j < c; ++j) gi[0][j] += g[r * c + j];
                     });
}

namespace {
void check_offsets(std::span<const std::size_t> offsets, std::size_t rows, const char* op) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != rows ||
      !std::is_sorted(offsets.begin(), offsets.end())) {
    throw DimensionError(std::string(op) + ": segment offsets do not partition " + std::to_string(rows) + " rows");
  }
}
}  // namespace

Tensor repeat_segments(const Tensor& x, std::span<const std::size_t> offsets) {
  if (x.rank() != 2) throw DimensionError("repeat_segments: expected [m, c], got " + shape_string(x.shape()));
  const std::size_t m = x.dim(0), c = x.dim(1);
  if (offsets.size() != m + 1) throw DimensionError("repeat_segments: need m + 1 offsets");
  const std::size_t r = offsets.back();
  check_offsets(offsets, r, "repeat_segments");
  if (r == 0) throw DimensionError("repeat_segments: all segments are empty");
  std::vector<double> out(r * c);
  const auto xv = x.values();
  for (std::size_t i = 0; i < m; ++i)
    for (auto row = offsets[i]; row < offsets[i + 1]; ++row) std::copy_n(xv.data() + i * c, c, out.data() + row * c);
  std::vector<std::size_t> off(offsets.begin(), offsets.end());
  const Tensor inputs[] = {x};
  return make_result({r, c}, std::move(out), inputs,
                     [off = std::move(off), c](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t i = 0; i + 1 < off.size(); ++i)
                         for (auto row = off[i]; row < off[i + 1]; ++row)
                           for (std::size_t ch = 0; ch < c; ++ch) gi[0][i * c + ch] += g[row * c + ch];
                     });
}

Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> offsets) {
  if (scores.rank() != 2) throw DimensionError("segment_softmax: expected [r, c], got " + shape_string(scores.shape()));
  const std::size_t r = scores.dim(0), c = scores.dim(1);
  check_offsets(offsets, r, "segment_softmax");
  auto out = std::make_shared<std::vector<double>>(r * c);
  const auto s = scores.values();
  std::vector<double> peak(c), total(c);
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    const auto lo = offsets[i], hi = offsets[i + 1];
    if (lo == hi) continue;
    std::fill(peak.begin(), peak.end(), -std::numeric_limits<double>::infinity());
    std::fill(total.begin(), total.end(), 0.0);
    for (auto row = lo; row < hi; ++row)
      for (std::size_t ch = 0; ch < c; ++ch) peak[ch] = std::max(peak[ch], s[row * c + ch]);
    for (auto row = lo; row < hi; ++row)
      for (std::size_t ch = 0; ch < c; ++ch) total[ch] += ((*out)[row * c + ch] = std::exp(s[row * c + ch] - peak[ch]));
    for (auto row = lo; row < hi; ++row)
      for (std::size_t ch = 0; ch < c; ++ch) (*out)[row * c + ch] /= total[ch];
  }
  std::vector<std::size_t> off(offsets.begin(), offsets.end());
  std::vector<double> value = *out;
  const Tensor inputs[] = {scores};
  return make_result({r, c}, std::move(value), inputs,
                     [out, off = std::move(off), c](std::span<const double> g, std::span<const std::span<double>> gi) {
                       std::vector<double> dot(c);
                       for (std::size_t i = 0; i + 1 < off.size(); ++i) {
                         std::fill(dot.begin(), dot.end(), 0.0);
                         for (auto row = off[i]; row < off[i + 1]; ++row)
                           for (std::size_t ch = 0; ch < c; ++ch) dot[ch] += g[row * c + ch] * (*out)[row * c + ch];
                         for (auto row = off[i]; row < off[i + 1]; ++row)
                           for (std::size_t ch = 0; ch < c; ++ch) {
                             const auto idx = row * c + ch;
                             gi[0][idx] += (*out)[idx] * (g[idx] - dot[ch]);
                           }
                       }
                     });
}

Tensor segment_weighted_sum(const Tensor& values, const Tensor& weights, std::span<const std::size_t> offsets) {
  require_same_shape(values, weights, "segment_weighted_sum");
  if (values.rank() != 2) {
    throw DimensionError("segment_weighted_sum: expected [r, c], got " + shape_string(values.shape()));
  }
  const std::size_t r = values.dim(0), c = values.dim(1);
  check_offsets(offsets, r, "segment_weighted_sum");
  const std::size_t m = offsets.size() - 1;
  if (m == 0) throw DimensionError("segment_weighted_sum: no segments");
  std::vector<double> out(m * c, 0.0);
  const auto v = values.values(), w = weights.values();
  for (std::size_t i = 0; i < m; ++i)
    for (auto row = offsets[i]; row < offsets[i + 1]; ++row)
      for (std::size_t ch = 0; ch < c; ++ch) out[i * c + ch] += v[row * c + ch] * w[row * c + ch];
  NodePtr vn = values.node(), wn = weights.node();
  std::vector<std::size_t> off(offsets.begin(), offsets.end());
  const Tensor inputs[] = {values, weights};
  return make_result({m, c}, std::move(out), inputs,
                     [vn, wn, off = std::move(off), c](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (std::size_t i = 0; i + 1 < off.size(); ++i)
                         for (auto row = off[i]; row < off[i + 1]; ++row)
                           for (std::size_t ch = 0; ch < c; ++ch) {
                             const auto idx = row * c + ch;
                             if (!gi[0].empty()) gi[0][idx] += g[i * c + ch] * wn->value[idx];
                             if (!gi[1].empty()) gi[1][idx] += g[i * c + ch] * vn->value[idx];
                           }
                     });
}

Tensor sum(const Tensor& x) {
  double total = 0;
  for (double v : x.values()) total += v;
  const Tensor inputs[] = {x};
  return make_result({1}, {total}, inputs,
                     [](std::span<const double> g, std::span<const std::span<double>> gi) {
                       for (auto& v : gi[0]) v += g[0];
                     });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_loss");
  const std::size_t n = pred.numel();
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred[i] - target[i];
    total += d * d;
  }
  NodePtr pn = pred.node(), tn = target.node();
  const Tensor inputs[] = {pred, target};
  return make_result({1}, {total / static_cast<double>(n)}, inputs,
                     [pn, tn, n](std::span<const double> g, std::span<const std::span<double>> gi) {
                       const double f = 2.0 * g[0] / static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i) {
                         const double d = pn->value[i] - tn->value[i];
                         if (!gi[0].empty()) gi[0][i] += f * d;
                         if (!gi[1].empty()) gi[1][i] -= f * d;
                       }
                     });
}

}  // namespace pdr::nn
