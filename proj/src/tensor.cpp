#include "pimpc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pimpc/errors.hpp"

namespace pimpc {

std::string Shape::str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from_values(shape, std::vector<double>(shape.numel(), 0.0),
                     requires_grad);
}

Tensor Tensor::full(Shape shape, double fill, bool requires_grad) {
  return from_values(shape, std::vector<double>(shape.numel(), fill),
                     requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
  if (values.size() != shape.numel()) {
    throw ShapeMismatchError("value count " + std::to_string(values.size()) +
                             " does not match shape " + shape.str());
  }
  Tensor t;
  t.data_ = std::make_shared<TensorData>();
  t.data_->shape = shape;
  t.data_->value = std::move(values);
  if (requires_grad) t.set_requires_grad(true);
  return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_values({1, 1}, {v}, requires_grad);
}

Tensor Tensor::column(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return from_values({n, 1}, std::move(values), requires_grad);
}

double Tensor::item() const {
  if (!is_scalar()) {
    throw ShapeMismatchError("item() on non-scalar tensor " + shape().str());
  }
  return data_->value[0];
}

void Tensor::set_requires_grad(bool on) {
  data_->requires_grad = on;
  if (on && data_->grad.size() != data_->value.size()) {
    data_->grad.assign(data_->value.size(), 0.0);
  }
}

void Tensor::zero_grad() {
  if (requires_grad()) std::fill(data_->grad.begin(), data_->grad.end(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : data_->value) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::clone() const {
  return from_values(shape(), values(), false);
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

namespace {

void accumulate(Tensor& t, const std::vector<double>& delta) {
  if (!t.requires_grad()) return;
  auto& g = t.grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!(a.shape() == b.shape())) {
    throw ShapeMismatchError(std::string(op) + ": " + a.shape().str() +
                             " vs " + b.shape().str());
  }
}

}  // namespace

Tensor Tape::make_result(Shape shape, std::vector<double> value,
                         bool any_input_grad) {
  return Tensor::from_values(shape, std::move(value),
                             recording_ && any_input_grad);
}

void Tape::check_inputs(std::initializer_list<const Tensor*> ts) const {
  if (!strict_finite_) return;
  for (const Tensor* t : ts) {
    if (!t->all_finite()) {
      throw NonFiniteInputError("non-finite value in op input of shape " +
                                t->shape().str());
    }
  }
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  check_inputs({&a, &b});
  if (a.cols() != b.rows()) {
    throw ShapeMismatchError("matmul: " + a.shape().str() + " * " +
                             b.shape().str());
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> y(n * m, 0.0);
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * m;
      double* yrow = y.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) yrow[j] += av * brow[j];
    }
  }
  Tensor out = make_result({n, m}, std::move(y),
                           a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, bc = b, oc = out;
    record([ac, bc, oc, n, k, m]() mutable {
      const auto& gy = oc.grad();
      if (ac.requires_grad()) {
        auto& ga = ac.grad();
        const double* pb = bc.values().data();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            const double* gyrow = gy.data() + i * m;
            const double* brow = pb + p * m;
            for (std::size_t j = 0; j < m; ++j) s += gyrow[j] * brow[j];
            ga[i * k + p] += s;
          }
        }
      }
      if (bc.requires_grad()) {
        auto& gb = bc.grad();
        const double* pa = ac.values().data();
        for (std::size_t i = 0; i < n; ++i) {
          const double* gyrow = gy.data() + i * m;
          for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            if (av == 0.0) continue;
            double* gbrow = gb.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) gbrow[j] += av * gyrow[j];
          }
        }
      }
    });
  }
  return out;
}

Tensor Tape::spmm(const SparseMatrix& a, const Tensor& x) {
  check_inputs({&x});
  if (a.n() != x.rows()) {
    throw ShapeMismatchError("spmm: sparse " + std::to_string(a.n()) +
                             " rows vs dense " + x.shape().str());
  }
  std::vector<double> y(x.size());
  a.multiply(x.values().data(), y.data(), x.cols());
  Tensor out = make_result(x.shape(), std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    Tensor xc = x, oc = out;
    const SparseMatrix* ap = &a;  // sparse operands outlive the tape
    record([ap, xc, oc]() mutable {
      std::vector<double> gx(xc.size());
      ap->multiply_transpose(oc.grad().data(), gx.data(), xc.cols());
      accumulate(xc, gx);
    });
  }
  return out;
}

Tensor Tape::cg_solve(std::shared_ptr<const SparseMatrix> spd,
                      const Tensor& rhs, const CgOptions& opts) {
  check_inputs({&rhs});
  if (spd->n() != rhs.rows()) {
    throw ShapeMismatchError("cg_solve: matrix " + std::to_string(spd->n()) +
                             " rows vs rhs " + rhs.shape().str());
  }
  const std::size_t n = rhs.rows(), d = rhs.cols();
  std::vector<double> sol(n * d, 0.0);
  std::vector<double> b(n), x(n);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < n; ++i) b[i] = rhs(i, c);
    std::fill(x.begin(), x.end(), 0.0);
    cg_solve_column(*spd, b, x, opts);
    for (std::size_t i = 0; i < n; ++i) sol[i * d + c] = x[i];
  }
  Tensor out = make_result(rhs.shape(), std::move(sol), rhs.requires_grad());
  if (out.requires_grad()) {
    Tensor rc = rhs, oc = out;
    CgOptions o = opts;
    record([spd, rc, oc, o]() mutable {
      // out = M^{-1} rhs with M symmetric, so d(rhs) = M^{-1} d(out).
      const std::size_t n = rc.rows(), d = rc.cols();
      std::vector<double> g(n), x(n), gb(n * d);
      for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t i = 0; i < n; ++i) g[i] = oc.grad()[i * d + c];
        std::fill(x.begin(), x.end(), 0.0);
        cg_solve_column(*spd, g, x, o);
        for (std::size_t i = 0; i < n; ++i) gb[i * d + c] = x[i];
      }
      accumulate(rc, gb);
    });
  }
  return out;
}

Tensor Tape::cg_solve(const SparseMatrix& spd, const Tensor& rhs,
                      const CgOptions& opts) {
  // Caller-owned operator; the no-op deleter documents that it must
  // outlive the backward pass.
  return cg_solve(std::shared_ptr<const SparseMatrix>(&spd, [](auto*) {}),
                  rhs, opts);
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  check_inputs({&a, &b});
  require_same_shape(a, b, "add");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = a.values()[i] + b.values()[i];
  Tensor out = make_result(a.shape(), std::move(y),
                           a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, bc = b, oc = out;
    record([ac, bc, oc]() mutable {
      accumulate(ac, oc.grad());
      accumulate(bc, oc.grad());
    });
  }
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  check_inputs({&a, &b});
  require_same_shape(a, b, "sub");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = a.values()[i] - b.values()[i];
  Tensor out = make_result(a.shape(), std::move(y),
                           a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, bc = b, oc = out;
    record([ac, bc, oc]() mutable {
      accumulate(ac, oc.grad());
      if (bc.requires_grad()) {
        auto& g = bc.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= oc.grad()[i];
      }
    });
  }
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  check_inputs({&a, &b});
  require_same_shape(a, b, "mul");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = a.values()[i] * b.values()[i];
  Tensor out = make_result(a.shape(), std::move(y),
                           a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, bc = b, oc = out;
    record([ac, bc, oc]() mutable {
      if (ac.requires_grad()) {
        auto& g = ac.grad();
        for (std::size_t i = 0; i < g.size(); ++i)
          g[i] += oc.grad()[i] * bc.values()[i];
      }
      if (bc.requires_grad()) {
        auto& g = bc.grad();
        for (std::size_t i = 0; i < g.size(); ++i)
          g[i] += oc.grad()[i] * ac.values()[i];
      }
    });
  }
  return out;
}

Tensor Tape::div(const Tensor& a, const Tensor& b) {
  check_inputs({&a, &b});
  require_same_shape(a, b, "div");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = a.values()[i] / b.values()[i];
  Tensor out = make_result(a.shape(), std::move(y),
                           a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, bc = b, oc = out;
    record([ac, bc, oc]() mutable {
      if (ac.requires_grad()) {
        auto& g = ac.grad();
        for (std::size_t i = 0; i < g.size(); ++i)
          g[i] += oc.grad()[i] / bc.values()[i];
      }
      if (bc.requires_grad()) {
        auto& g = bc.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double bv = bc.values()[i];
          g[i] -= oc.grad()[i] * ac.values()[i] / (bv * bv);
        }
      }
    });
  }
  return out;
}

Tensor Tape::scale(const Tensor& a, double c) {
  check_inputs({&a});
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = c * a.values()[i];
  Tensor out = make_result(a.shape(), std::move(y), a.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, oc = out;
    record([ac, oc, c]() mutable {
      auto& g = ac.grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * oc.grad()[i];
    });
  }
  return out;
}

Tensor Tape::add_rowvec(const Tensor& a, const Tensor& row) {
  check_inputs({&a, &row});
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeMismatchError("add_rowvec: " + a.shape().str() + " + " +
                             row.shape().str());
  }
  const std::size_t n = a.rows(), d = a.cols();
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      y[i * d + j] = a.values()[i * d + j] + row.values()[j];
  Tensor out = make_result(a.shape(), std::move(y),
                           a.requires_grad() || row.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, rc = row, oc = out;
    record([ac, rc, oc, n, d]() mutable {
      accumulate(ac, oc.grad());
      if (rc.requires_grad()) {
        auto& g = rc.grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) g[j] += oc.grad()[i * d + j];
      }
    });
  }
  return out;
}

Tensor Tape::mul_colvec(const Tensor& a, const Tensor& col) {
  check_inputs({&a, &col});
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw ShapeMismatchError("mul_colvec: " + a.shape().str() + " * " +
                             col.shape().str());
  }
  const std::size_t n = a.rows(), d = a.cols();
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double c = col.values()[i];
    for (std::size_t j = 0; j < d; ++j) y[i * d + j] = a.values()[i * d + j] * c;
  }
  Tensor out = make_result(a.shape(), std::move(y),
                           a.requires_grad() || col.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, cc = col, oc = out;
    record([ac, cc, oc, n, d]() mutable {
      if (ac.requires_grad()) {
        auto& g = ac.grad();
        for (std::size_t i = 0; i < n; ++i) {
          const double c = cc.values()[i];
          for (std::size_t j = 0; j < d; ++j) g[i * d + j] += oc.grad()[i * d + j] * c;
        }
      }
      if (cc.requires_grad()) {
        auto& g = cc.grad();
        for (std::size_t i = 0; i < n; ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < d; ++j)
            s += oc.grad()[i * d + j] * ac.values()[i * d + j];
          g[i] += s;
        }
      }
    });
  }
  return out;
}

Tensor Tape::mul_scalar(const Tensor& a, const Tensor& s) {
  check_inputs({&a, &s});
  if (!s.is_scalar()) {
    throw ShapeMismatchError("mul_scalar: scalar operand has shape " +
                             s.shape().str());
  }
  const double sv = s.values()[0];
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = sv * a.values()[i];
  Tensor out = make_result(a.shape(), std::move(y),
                           a.requires_grad() || s.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, sc = s, oc = out;
    record([ac, sc, oc]() mutable {
      if (ac.requires_grad()) {
        auto& g = ac.grad();
        const double sv = sc.values()[0];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += sv * oc.grad()[i];
      }
      if (sc.requires_grad()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < ac.size(); ++i)
          acc += oc.grad()[i] * ac.values()[i];
        sc.grad()[0] += acc;
      }
    });
  }
  return out;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeMismatchError("concat_cols: no inputs");
  const std::size_t n = parts[0].rows();
  std::size_t total = 0;
  bool any_grad = false;
  for (const Tensor& p : parts) {
    check_inputs({&p});
    if (p.rows() != n) {
      throw ShapeMismatchError("concat_cols: row mismatch " + p.shape().str());
    }
    total += p.cols();
    any_grad = any_grad || p.requires_grad();
  }
  std::vector<double> y(n * total);
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    const std::size_t d = p.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        y[i * total + off + j] = p.values()[i * d + j];
    off += d;
  }
  Tensor out = make_result({n, total}, std::move(y), any_grad);
  if (out.requires_grad()) {
    std::vector<Tensor> pc = parts;
    Tensor oc = out;
    record([pc, oc, n, total]() mutable {
      std::size_t off = 0;
      for (Tensor& p : pc) {
        const std::size_t d = p.cols();
        if (p.requires_grad()) {
          auto& g = p.grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j)
              g[i * d + j] += oc.grad()[i * total + off + j];
        }
        off += d;
      }
    });
  }
  return out;
}

Tensor Tape::take_rows(const Tensor& a, const std::vector<int>& rows) {
  check_inputs({&a});
  const std::size_t d = a.cols();
  for (int r : rows) {
    if (r < 0 || static_cast<std::size_t>(r) >= a.rows()) {
      throw IndexOutOfRangeError("take_rows: row " + std::to_string(r));
    }
  }
  std::vector<double> y(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      y[i * d + j] = a.values()[static_cast<std::size_t>(rows[i]) * d + j];
  Tensor out = make_result({rows.size(), d}, std::move(y), a.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, oc = out;
    std::vector<int> rc = rows;
    record([ac, oc, rc, d]() mutable {
      auto& g = ac.grad();
      for (std::size_t i = 0; i < rc.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
          g[static_cast<std::size_t>(rc[i]) * d + j] += oc.grad()[i * d + j];
    });
  }
  return out;
}

Tensor Tape::slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
  check_inputs({&a});
  if (start + count > a.cols()) {
    throw IndexOutOfRangeError("slice_cols: [" + std::to_string(start) + ", " +
                               std::to_string(start + count) + ") of " +
                               a.shape().str());
  }
  const std::size_t n = a.rows(), d = a.cols();
  std::vector<double> y(n * count);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < count; ++j)
      y[i * count + j] = a.values()[i * d + start + j];
  Tensor out = make_result({n, count}, std::move(y), a.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, oc = out;
    record([ac, oc, start, count, n, d]() mutable {
      auto& g = ac.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < count; ++j)
          g[i * d + start + j] += oc.grad()[i * count + j];
    });
  }
  return out;
}

Tensor Tape::sum(const Tensor& a) {
  check_inputs({&a});
  double s = 0.0;
  for (double v : a.values()) s += v;
  Tensor out = make_result({1, 1}, {s}, a.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, oc = out;
    record([ac, oc]() mutable {
      auto& g = ac.grad();
      const double gy = oc.grad()[0];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy;
    });
  }
  return out;
}

Tensor Tape::mean(const Tensor& a) {
  check_inputs({&a});
  if (a.size() == 0) throw ShapeMismatchError("mean of empty tensor");
  double s = 0.0;
  for (double v : a.values()) s += v;
  const double inv = 1.0 / static_cast<double>(a.size());
  Tensor out = make_result({1, 1}, {s * inv}, a.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, oc = out;
    record([ac, oc, inv]() mutable {
      auto& g = ac.grad();
      const double gy = oc.grad()[0] * inv;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy;
    });
  }
  return out;
}

Tensor Tape::mean_rows(const Tensor& a) {
  check_inputs({&a});
  const std::size_t n = a.rows(), d = a.cols();
  if (n == 0) throw ShapeMismatchError("mean_rows of empty tensor");
  std::vector<double> y(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) y[j] += a.values()[i * d + j];
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : y) v *= inv;
  Tensor out = make_result({1, d}, std::move(y), a.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, oc = out;
    record([ac, oc, n, d, inv]() mutable {
      auto& g = ac.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) g[i * d + j] += oc.grad()[j] * inv;
    });
  }
  return out;
}

#define PIMPC_UNARY_OP(NAME, VALUE_EXPR, GRAD_EXPR)                         \
  Tensor Tape::NAME(const Tensor& a) {                                     \
    check_inputs({&a});                                                    \
    std::vector<double> y(a.size());                                       \
    for (std::size_t i = 0; i < y.size(); ++i) {                           \
      const double x = a.values()[i];                                      \
      y[i] = (VALUE_EXPR);                                                 \
    }                                                                      \
    Tensor out = make_result(a.shape(), std::move(y), a.requires_grad());  \
    if (out.requires_grad()) {                                             \
      Tensor ac = a, oc = out;                                             \
      record([ac, oc]() mutable {                                          \
        auto& g = ac.grad();                                               \
        for (std::size_t i = 0; i < g.size(); ++i) {                       \
          const double x = ac.values()[i];                                 \
          const double yv = oc.values()[i];                                \
          (void)x;                                                         \
          (void)yv;                                                        \
          g[i] += oc.grad()[i] * (GRAD_EXPR);                              \
        }                                                                  \
      });                                                                  \
    }                                                                      \
    return out;                                                            \
  }

namespace detail {

inline double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double stable_softplus(double x) {
  return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);
}

inline double gauss_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

inline double gauss_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

}  // namespace detail

PIMPC_UNARY_OP(sin, std::sin(x), std::cos(x))
PIMPC_UNARY_OP(cos, std::cos(x), -std::sin(x))
PIMPC_UNARY_OP(tanh, std::tanh(x), 1.0 - yv * yv)
PIMPC_UNARY_OP(exp, std::exp(x), yv)
PIMPC_UNARY_OP(log, std::log(x), 1.0 / x)
PIMPC_UNARY_OP(sigmoid, detail::stable_sigmoid(x), yv * (1.0 - yv))
PIMPC_UNARY_OP(softplus, detail::stable_softplus(x), detail::stable_sigmoid(x))
PIMPC_UNARY_OP(gelu, x* detail::gauss_cdf(x),
               detail::gauss_cdf(x) + x * detail::gauss_pdf(x))

#undef PIMPC_UNARY_OP

Tensor Tape::pow_const(const Tensor& a, double exponent) {
  check_inputs({&a});
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = std::pow(a.values()[i], exponent);
  Tensor out = make_result(a.shape(), std::move(y), a.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, oc = out;
    record([ac, oc, exponent]() mutable {
      auto& g = ac.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = ac.values()[i];
        // Subgradient 0 at x == 0 keeps focal terms finite at p == 1.
        const double d =
            (x == 0.0) ? 0.0 : exponent * std::pow(x, exponent - 1.0);
        g[i] += oc.grad()[i] * d;
      }
    });
  }
  return out;
}

Tensor Tape::clamp(const Tensor& a, double lo, double hi) {
  check_inputs({&a});
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = std::min(std::max(a.values()[i], lo), hi);
  Tensor out = make_result(a.shape(), std::move(y), a.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, oc = out;
    record([ac, oc, lo, hi]() mutable {
      auto& g = ac.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = ac.values()[i];
        if (x > lo && x < hi) g[i] += oc.grad()[i];
      }
    });
  }
  return out;
}

Tensor Tape::layer_norm(const Tensor& x, const Tensor& gain,
                        const Tensor& bias, double eps) {
  check_inputs({&x, &gain, &bias});
  const std::size_t n = x.rows(), d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 ||
      bias.cols() != d) {
    throw ShapeMismatchError("layer_norm: gain " + gain.shape().str() +
                             ", bias " + bias.shape().str() + " for input " +
                             x.shape().str());
  }
  std::vector<double> y(x.size());
  auto xhat = std::make_shared<std::vector<double>>(x.size());
  auto inv_std = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.values().data() + i * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (row[j] - mu) * is;
      (*xhat)[i * d + j] = xh;
      y[i * d + j] = gain.values()[j] * xh + bias.values()[j];
    }
  }
  Tensor out = make_result(
      x.shape(), std::move(y),
      x.requires_grad() || gain.requires_grad() || bias.requires_grad());
  if (out.requires_grad()) {
    Tensor xc = x, gc = gain, bc = bias, oc = out;
    record([xc, gc, bc, oc, xhat, inv_std, n, d]() mutable {
      const auto& gy = oc.grad();
      if (gc.requires_grad()) {
        auto& gg = gc.grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j)
            gg[j] += gy[i * d + j] * (*xhat)[i * d + j];
      }
      if (bc.requires_grad()) {
        auto& gb = bc.grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) gb[j] += gy[i * d + j];
      }
      if (xc.requires_grad()) {
        auto& gx = xc.grad();
        for (std::size_t i = 0; i < n; ++i) {
          double mean_dxh = 0.0, mean_dxh_xh = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double dxh = gy[i * d + j] * gc.values()[j];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * (*xhat)[i * d + j];
          }
          mean_dxh /= static_cast<double>(d);
          mean_dxh_xh /= static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j) {
            const double dxh = gy[i * d + j] * gc.values()[j];
            gx[i * d + j] += (*inv_std)[i] * (dxh - mean_dxh -
                                              (*xhat)[i * d + j] * mean_dxh_xh);
          }
        }
      }
    });
  }
  return out;
}

Tensor Tape::softmax_rows(const Tensor& x) {
  check_inputs({&x});
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.values().data() + i * d;
    double mx = row[0];
    for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      y[i * d + j] = std::exp(row[j] - mx);
      z += y[i * d + j];
    }
    for (std::size_t j = 0; j < d; ++j) y[i * d + j] /= z;
  }
  Tensor out = make_result(x.shape(), std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    Tensor xc = x, oc = out;
    record([xc, oc, n, d]() mutable {
      auto& gx = xc.grad();
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j)
          dot += oc.grad()[i * d + j] * oc.values()[i * d + j];
        for (std::size_t j = 0; j < d; ++j)
          gx[i * d + j] +=
              oc.values()[i * d + j] * (oc.grad()[i * d + j] - dot);
      }
    });
  }
  return out;
}

Tensor Tape::dropout(const Tensor& x, double p, bool training, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw ConfigError("dropout probability must be in [0, 1), got " +
                      std::to_string(p));
  }
  if (!training || p == 0.0) return x;  // identity in eval mode
  check_inputs({&x});
  const double keep = 1.0 - p;
  auto mask = std::make_shared<std::vector<double>>(x.size());
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    (*mask)[i] = m;
    y[i] = x.values()[i] * m;
  }
  Tensor out = make_result(x.shape(), std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    Tensor xc = x, oc = out;
    record([xc, oc, mask]() mutable {
      auto& g = xc.grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += oc.grad()[i] * (*mask)[i];
    });
  }
  return out;
}

Tensor Tape::gather_cols(const Tensor& a, const std::vector<int>& index) {
  check_inputs({&a});
  if (index.size() != a.rows()) {
    throw ShapeMismatchError("gather_cols: " + std::to_string(index.size()) +
                             " indices for " + a.shape().str());
  }
  const std::size_t d = a.cols();
  std::vector<double> y(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= d) {
      throw IndexOutOfRangeError("gather_cols: column " +
                                 std::to_string(index[i]));
    }
    y[i] = a.values()[i * d + static_cast<std::size_t>(index[i])];
  }
  Tensor out = make_result({index.size(), 1}, std::move(y), a.requires_grad());
  if (out.requires_grad()) {
    Tensor ac = a, oc = out;
    std::vector<int> ic = index;
    record([ac, oc, ic, d]() mutable {
      auto& g = ac.grad();
      for (std::size_t i = 0; i < ic.size(); ++i)
        g[i * d + static_cast<std::size_t>(ic[i])] += oc.grad()[i];
    });
  }
  return out;
}

Tensor Tape::nll_gather(const Tensor& a, const std::vector<int>& index,
                        double floor) {
  Tensor picked = gather_cols(a, index);
  Tensor clamped = clamp(picked, floor, 1.0);
  return scale(log(clamped), -1.0);
}

Tensor Tape::kuramoto_order(const Tensor& theta) {
  check_inputs({&theta});
  if (theta.cols() != 1) {
    throw ShapeMismatchError("kuramoto_order expects a column vector, got " +
                             theta.shape().str());
  }
  const std::size_t n = theta.rows();
  double c = 0.0, s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c += std::cos(theta.values()[i]);
    s += std::sin(theta.values()[i]);
  }
  c /= static_cast<double>(n);
  s /= static_cast<double>(n);
  const double r = std::sqrt(c * c + s * s);
  Tensor out = make_result({1, 1}, {r}, theta.requires_grad());
  if (out.requires_grad()) {
    Tensor tc = theta, oc = out;
    record([tc, oc, c, s, r, n]() mutable {
      if (r < 1e-12) return;  // gradient undefined at full cancellation
      auto& g = tc.grad();
      const double gy = oc.grad()[0];
      for (std::size_t i = 0; i < n; ++i) {
        const double th = tc.values()[i];
        g[i] += gy * (-c * std::sin(th) + s * std::cos(th)) /
                (static_cast<double>(n) * r);
      }
    });
  }
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || !loss.is_scalar()) {
    throw NonScalarLossError("backward requires a scalar loss");
  }
  if (loss.requires_grad()) {
    Tensor seed = loss;  // non-const alias of the same storage
    seed.grad()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backprop();
  }
  nodes_.clear();
}

double gradcheck(const std::function<Tensor(Tape&)>& program,
                 std::span<Tensor> leaves, double step) {
  for (Tensor& leaf : leaves) {
    if (!leaf.requires_grad()) leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  Tape tape;
  Tensor loss = program(tape);
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (Tensor& leaf : leaves) analytic.push_back(leaf.grad());

  auto eval = [&]() {
    Tape t(false);
    return program(t).item();
  };

  double max_rel = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& vals = leaves[li].values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      // Fourth-order central stencil.
      vals[i] = orig + 2.0 * step;
      const double fp2 = eval();
      vals[i] = orig + step;
      const double fp1 = eval();
      vals[i] = orig - step;
      const double fm1 = eval();
      vals[i] = orig - 2.0 * step;
      const double fm2 = eval();
      vals[i] = orig;
      // Pairwise differences cancel exactly for coordinates the program
      // does not read, keeping structural zeros noise-free.
      const double numeric =
          (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * step);
      const double a = analytic[li][i];
      const double rel =
          std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

double cg_solve_column(const SparseMatrix& spd, std::span<const double> b,
                       std::span<double> x, const CgOptions& opts) {
  const std::size_t n = spd.n();
  std::vector<double> diag = spd.diagonal();
  for (double& d : diag) {
    if (d <= 0.0) d = 1.0;  // Jacobi fallback for a non-positive diagonal
  }
  std::vector<double> r(n), z(n), p(n), ap(n);
  spd.multiply(x.data(), ap.data(), 1);
  double bnorm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = b[i] - ap[i];
    bnorm += b[i] * b[i];
  }
  bnorm = std::sqrt(bnorm);
  const double target = opts.tolerance * std::max(1.0, bnorm);

  auto rnorm = [&]() {
    double s = 0.0;
    for (double v : r) s += v * v;
    return std::sqrt(s);
  };

  double res = rnorm();
  if (res <= target) return res;

  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];

  for (int it = 0; it < opts.max_iterations; ++it) {
    spd.multiply(p.data(), ap.data(), 1);
    double pap = 0.0;
    for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (pap <= 0.0) {
      throw ConvergenceError("cg: operator is not positive definite");
    }
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    res = rnorm();
    if (res <= target) return res;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    double rz_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw ConvergenceError("cg: residual " + std::to_string(res) +
                         " above tolerance after " +
                         std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace pimpc
