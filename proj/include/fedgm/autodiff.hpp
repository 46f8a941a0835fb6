#pragma once

// Reverse-mode differentiation over dense 2-D tensors.
//
// Every value lives in an immutable graph node behind a `Var` handle. The
// backward rule of each op is written in terms of other ops, so the gradients
// returned by `grad(..., create_graph = true)` are themselves differentiable.
// That is what lets a matching loss between two parameter gradients be
// differentiated with respect to the data that produced one of them.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fedgm/errors.hpp"

namespace fedgm {

using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseTensor = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;
using Mask = std::vector<bool>;

std::string shape_string(Index rows, Index cols);

namespace ad {

struct Node;

class Var {
 public:
  Var() = default;

  /// A leaf that never receives gradients.
  static Var constant(Tensor value);
  /// A leaf that gradients can be taken with respect to.
  static Var parameter(Tensor value);

  const Tensor& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const;
  bool defined() const { return static_cast<bool>(node_); }
  /// Value of a 1x1 tensor.
  double item() const;
  const Var& input(std::size_t i) const;
  const char* op_name() const;
  const Node* node() const { return node_.get(); }

 private:
  explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;

  friend Var make_op(const char* op, Tensor value, std::vector<Var> inputs,
                     std::function<std::vector<Var>(const Var&, const Var&)> backward);
  friend std::vector<Var> grad(const Var&, std::span<const Var>, bool);
};

/// Backward rule: (self, upstream gradient) -> one gradient per input; an
/// undefined Var means "no contribution".
using BackwardFn = std::function<std::vector<Var>(const Var& self, const Var& upstream)>;

Var make_op(const char* op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

/// While alive on this thread, new ops record no history.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Re-enables recording inside a NoGradGuard scope, for computations that
/// need an inner tape of their own (gradients used as values).
class EnableGradGuard {
 public:
  EnableGradGuard();
  ~EnableGradGuard();
  EnableGradGuard(const EnableGradGuard&) = delete;
  EnableGradGuard& operator=(const EnableGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// A constant sparse linear operator; only the dense operand is differentiated.
class SparseOperator {
 public:
  SparseOperator() = default;
  explicit SparseOperator(SparseTensor m);
  const SparseTensor& matrix() const { return *m_; }
  SparseOperator transposed() const;
  Index rows() const { return m_->rows(); }
  Index cols() const { return m_->cols(); }

 private:
  std::shared_ptr<const SparseTensor> m_;
  std::shared_ptr<const SparseTensor> mt_;
};

// Elementwise (identical shapes).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var shift(const Var& a, double s);
Var power(const Var& a, double p);
Var relu(const Var& a);
Var sigmoid(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

// Products.
Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var matmul_tn(const Var& a, const Var& b);  // a^T * b
Var transpose(const Var& a);
Var spmm(const SparseOperator& s, const Var& b);

// Reductions and broadcasts.
Var sum(const Var& a);                                // -> 1x1
Var sum_rows(const Var& a);                           // m x n -> 1 x n
Var sum_cols(const Var& a);                           // m x n -> m x 1
Var broadcast_to(const Var& a, Index rows, Index cols);  // 1x1 -> rows x cols
Var broadcast_rows(const Var& a, Index rows);         // 1 x n -> rows x n
Var broadcast_cols(const Var& a, Index cols);         // m x 1 -> m x cols

// Row indexing.
Var gather_rows(const Var& a, std::vector<Index> idx);
Var scatter_rows(const Var& a, std::vector<Index> idx, Index out_rows);
Var reshape(const Var& a, Index rows, Index cols);

Var softmax_rows(const Var& a);

/// Mean over masked rows of -log softmax(logits)[label].
Var masked_cross_entropy(const Var& logits, std::span<const int> labels, const Mask& mask);

/// Reverse-mode gradients of a scalar `output` w.r.t. each of `wrt`. Inputs the
/// output does not depend on get zero gradients. With `create_graph` the
/// results are recorded and can be differentiated again.
std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool create_graph = false);

inline std::vector<Var> grad(const Var& output, std::initializer_list<Var> wrt,
                             bool create_graph = false) {
  return grad(output, std::span<const Var>(wrt.begin(), wrt.size()), create_graph);
}

/// Max relative error between grad(f)(x) and central differences of step h,
/// with denominator max(|analytic|, |numeric|, 1e-8).
double finite_difference_check(const std::function<Var(const Var&)>& f, const Tensor& x, double h);

}  // namespace ad
}  // namespace fedgm
