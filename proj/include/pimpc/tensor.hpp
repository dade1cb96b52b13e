#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pimpc/rng.hpp"
#include "pimpc/sparse.hpp"

namespace pimpc {

/// All tensors are dense row-major matrices; vectors are n-by-1 and
/// scalars 1-by-1.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool operator==(const Shape&) const = default;
  std::size_t numel() const { return rows * cols; }
  std::string str() const;
};

struct TensorData {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated iff requires_grad
  bool requires_grad = false;
};

/// Shared handle to tensor storage. Copies alias the same buffer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double fill, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  /// Column vector n-by-1.
  static Tensor column(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return data_->shape; }
  std::size_t rows() const { return data_->shape.rows; }
  std::size_t cols() const { return data_->shape.cols; }
  std::size_t size() const { return data_->shape.numel(); }
  bool is_scalar() const { return rows() == 1 && cols() == 1; }

  std::vector<double>& values() { return data_->value; }
  const std::vector<double>& values() const { return data_->value; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_->value[r * cols() + c];
  }
  double item() const;

  bool requires_grad() const { return data_ && data_->requires_grad; }
  /// Turns gradient accumulation on (allocates a zero grad buffer).
  void set_requires_grad(bool on);
  std::vector<double>& grad() { return data_->grad; }
  const std::vector<double>& grad() const { return data_->grad; }
  void zero_grad();

  bool all_finite() const;

  /// Deep copy of values (no autodiff relation to the source).
  Tensor clone() const;

 private:
  std::shared_ptr<TensorData> data_;
};

struct CgOptions {
  double tolerance = 1e-8;
  int max_iterations = 500;
};

/// Records primitive operations in execution order; backward replays
/// them once in reverse, accumulating vector-Jacobian products into
/// every requires_grad leaf. Construction order is topological by
/// definition since inputs must exist before an op can consume them.
/// A tape built with recording=false computes forward values only.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  /// Opt-in validation that every op input is finite.
  void set_strict_finite(bool on) { strict_finite_ = on; }

  // --- linear algebra ---
  Tensor matmul(const Tensor& a, const Tensor& b);
  /// Sparse operand is a constant (graphs are not learned). The matrix
  /// must outlive the backward pass.
  Tensor spmm(const SparseMatrix& a, const Tensor& x);
  /// Solves (SPD matrix) * out = rhs column-wise with Jacobi-preconditioned
  /// conjugate gradients; backward solves the same symmetric system. The
  /// owning overload keeps temporaries alive through backward.
  Tensor cg_solve(std::shared_ptr<const SparseMatrix> spd, const Tensor& rhs,
                  const CgOptions& opts);
  Tensor cg_solve(const SparseMatrix& spd, const Tensor& rhs,
                  const CgOptions& opts);

  // --- pointwise arithmetic ---
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor div(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  /// a (n-by-d) + row (1-by-d), broadcast down rows.
  Tensor add_rowvec(const Tensor& a, const Tensor& row);
  /// a (n-by-d) * col (n-by-1), broadcast across columns.
  Tensor mul_colvec(const Tensor& a, const Tensor& col);
  /// a * s with s a 1-by-1 tensor (differentiable in both).
  Tensor mul_scalar(const Tensor& a, const Tensor& s);

  // --- shape ---
  Tensor concat_cols(const std::vector<Tensor>& parts);
  Tensor take_rows(const Tensor& a, const std::vector<int>& rows);
  Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);

  // --- reductions ---
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);
  /// Column means, 1-by-d.
  Tensor mean_rows(const Tensor& a);

  // --- elementwise functions ---
  Tensor sin(const Tensor& a);
  Tensor cos(const Tensor& a);
  Tensor tanh(const Tensor& a);
  Tensor exp(const Tensor& a);
  Tensor log(const Tensor& a);
  Tensor sigmoid(const Tensor& a);
  Tensor softplus(const Tensor& a);
  /// Exact Gaussian-CDF GELU.
  Tensor gelu(const Tensor& a);
  Tensor pow_const(const Tensor& a, double exponent);
  Tensor clamp(const Tensor& a, double lo, double hi);

  // --- structured ops ---
  /// Per-row normalization with learned gain/bias (both 1-by-d).
  Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                    double eps = 1e-5);
  Tensor softmax_rows(const Tensor& x);
  /// Inverted dropout; identity when !training or p == 0.
  Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);
  /// out_i = a[i, index[i]].
  Tensor gather_cols(const Tensor& a, const std::vector<int>& index);
  /// out_i = -log(max(a[i, index[i]], floor)).
  Tensor nll_gather(const Tensor& a, const std::vector<int>& index,
                    double floor = 1e-12);
  /// Kuramoto order parameter magnitude r(theta) as a 1-by-1 tensor.
  Tensor kuramoto_order(const Tensor& theta);

  /// Reverse sweep from a scalar loss; seeds d(loss)/d(loss) = 1 and
  /// visits every recorded node exactly once. The tape is consumed.
  void backward(const Tensor& loss);

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::function<void()> backprop;
  };

  Tensor make_result(Shape shape, std::vector<double> value,
                     bool any_input_grad);
  void record(std::function<void()> fn) { nodes_.push_back({std::move(fn)}); }
  void check_inputs(std::initializer_list<const Tensor*> ts) const;

  std::vector<Node> nodes_;
  bool recording_ = true;
  bool strict_finite_ = false;
};

/// Max relative error between tape gradients and central differences of
/// `program` (a scalar-valued function of the given leaves). The
/// numeric side re-evaluates the program on fresh non-recording tapes,
/// independent of the backward rules it checks.
double gradcheck(const std::function<Tensor(Tape&)>& program,
                 std::span<Tensor> leaves, double step = 5e-4);

/// Solves spd * x = b (single column) with Jacobi-preconditioned CG.
/// Returns the achieved residual norm; throws ConvergenceError if the
/// tolerance is not reached within the iteration cap.
double cg_solve_column(const SparseMatrix& spd, std::span<const double> b,
                       std::span<double> x, const CgOptions& opts);

}  // namespace pimpc
