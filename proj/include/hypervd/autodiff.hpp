#pragma once

// Minimal reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every intermediate matrix together with a closure that
// pushes the incoming adjoint back to the node's parents. Rows are snippets
// throughout the model code, so most ops below are row-wise. Gradients are
// accumulated in recording order reversed, which makes the reduction order
// (and therefore the result) deterministic.

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace hypervd::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

class Tape {
 public:
  // Receives the adjoint of the node being processed.
  using Backward = std::function<void(Tape&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value);
  Var constant(Matrix value);
  // Records an op output. The closure only runs if one of the parents
  // requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);
  Var record(Matrix value, const std::vector<Var>& parents, Backward backward);

  // Seeds d(root)/d(root) = 1; root must be 1x1.
  void backward(Var root);

  const Matrix& value(std::size_t i) const { return nodes_[i].value; }
  bool requires_grad(Var v) const { return nodes_[v.index()].requires_grad; }
  // Zero matrix of the right shape if nothing flowed into v.
  Matrix grad(Var v) const;

  void accumulate(Var v, const Matrix& delta);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
};

// Elementwise / arithmetic
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var cmul(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double s);
Var add_const(Var a, double s);
Var mul_scalar(Var a, Var s);  // s is 1x1
Var add_scalar(Var a, Var s);  // s is 1x1
Var sum(const std::vector<Var>& terms);  // same-shape terms
Var leaky_relu(Var a, double slope);
Var sigmoid(Var a);
Var sqrt(Var a);
Var exp(Var a);
Var abs(Var a);

// Linear algebra
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
// x * W^T + 1 * b^T with W (out x in) and b (out x 1).
Var linear(Var x, Var w, Var b);
Var linear(Var x, Var w);

// Row/column structure
Var mul_col(Var a, Var c);  // a(i,j) * c(i)
Var div_col(Var a, Var c);  // a(i,j) / c(i)
Var row_sum(Var a);
Var row_sq_norm(Var a);
Var cols(Var a, Eigen::Index start, Eigen::Index n);
Var hcat(const std::vector<Var>& parts);

// Lorentz-specific
// Row-wise Minkowski inner product with column 0 time-like; T x 1.
Var lorentz_rows(Var a, Var b);
// Negates entry (0,0) of a column vector: turns <x, w>_L into x . flip(w).
Var flip_time(Var w);
// Row-wise exp map at the origin of (0, v_i); (T x n) -> (T x n+1).
Var lift_rows(Var v, double curvature);
// exp(-d_L(x_i, x_j)) for all row pairs; diagonal fixed at 1 and
// treated as constant.
Var hyperbolic_similarity(Var x, double curvature);
// Row-normalised (Euclidean) vectors; zero rows stay zero.
Var row_normalize(Var a, double eps = 1e-12);
// Row softmax over entries with logit > tau plus the diagonal; the rest
// receive exactly zero probability and zero gradient.
Var masked_row_softmax(Var logits, double tau);

// Losses
// Mean of the k largest entries of a column, k = min(floor(T/q) + 1, T).
Var topk_mean(Var scores, int q);
// -y log s - (1-y) log(1-s) with log arguments clamped at 1e-12.
Var bce(Var s, double y);

}  // namespace hypervd::ad
