#pragma once

// Fully hyperbolic building blocks on the Lorentz model: the hyperbolic
// linear layer, neighbourhood aggregation and the Lorentzian classifier.
//
// Every block has a row-batched differentiable form (rows are snippets)
// used by the model, and a single-point convenience form that wraps it.

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypervd/autodiff.hpp"
#include "hypervd/lorentz.hpp"
#include "hypervd/numeric.hpp"

namespace hypervd::nn {

enum class Mode { train, eval };

// Binds parameter storage to tape leaves and owns the dropout stream for
// one forward pass. Parameters are keyed by their data address (the same
// pointer ParamRef carries), so a parameter used by several videos in a
// batch maps to a single leaf.
class ForwardContext {
 public:
  ForwardContext(ad::Tape& tape, Mode mode, std::mt19937_64* rng = nullptr, bool track_grads = true);

  ad::Tape& tape() { return tape_; }
  Mode mode() const { return mode_; }

  ad::Var param(const Matrix& m);
  ad::Var param(const Vector& v);  // bound as a column
  ad::Var param(const double& s);  // bound as 1x1
  ad::Var constant(Matrix m) { return tape_.constant(std::move(m)); }

  // Leaf bound to this storage address, if any op used it.
  const ad::Var* find(const void* storage) const;

  // Inverted dropout; identity in eval mode or when rate == 0.
  ad::Var dropout(ad::Var x, double rate);

 private:
  ad::Var bind(const void* key, Matrix value);

  ad::Tape& tape_;
  Mode mode_;
  std::mt19937_64* rng_;
  bool track_grads_;
  std::unordered_map<const void*, ad::Var> leaves_;
};

// Ordinary affine layer y = W x + b.
struct LinearParams {
  Matrix W;  // out x in
  Vector b;  // out

  Eigen::Index in_dim() const { return W.cols(); }
  Eigen::Index out_dim() const { return W.rows(); }
};

struct HyperbolicLinearParams {
  Matrix W;             // d x (n+1)
  Vector v;             // n+1, boost velocity direction of the gate
  Vector b;             // d
  double b_gate = 0.0;  // b'
  double lambda = 1.0;  // scaling range, > 0
  double dropout_rate = 0.0;
  double leaky_slope = 0.01;

  Eigen::Index in_dim() const { return W.cols(); }
  Eigen::Index out_dim() const { return W.rows(); }
};

struct ClassifierParams {
  Vector W;
  double b = 0.0;
  double epsilon = 2.0;  // fixed hyper-parameter, not learned
};

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Eigen::Index fan_out,
                      std::mt19937_64& rng);

LinearParams init_linear(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng);
HyperbolicLinearParams init_hyperbolic_linear(Eigen::Index in, Eigen::Index out, double dropout_rate,
                                              double leaky_slope, std::mt19937_64& rng);
ClassifierParams init_classifier(Eigen::Index in, double epsilon, std::mt19937_64& rng);

std::size_t count_parameters(const LinearParams& p);
std::size_t count_parameters(const HyperbolicLinearParams& p);
std::size_t count_parameters(const ClassifierParams& p);

// Named view into a learnable tensor. rank is 0 for scalars, 1 for
// vectors, 2 for matrices.
struct ParamRef {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  int rank;

  Eigen::Index size() const { return rows * cols; }
  Eigen::Map<Matrix> map() const { return Eigen::Map<Matrix>(data, rows, cols); }
};

void append_params(std::vector<ParamRef>& out, const std::string& prefix, LinearParams& p);
void append_params(std::vector<ParamRef>& out, const std::string& prefix, HyperbolicLinearParams& p);
void append_params(std::vector<ParamRef>& out, const std::string& prefix, ClassifierParams& p);

// ---------------------------------------------------------------------------
// Row-batched differentiable forms.

// Prepends the time coordinate sqrt(|s|^2 - 1/K) to spatial rows s.
ad::Var with_time(ad::Var spatial, double curvature);

ad::Var linear_rows(ForwardContext& ctx, const LinearParams& p, ad::Var x);

// x: T x (n+1) manifold rows -> T x (d+1) manifold rows.
ad::Var hl_rows(ForwardContext& ctx, const HyperbolicLinearParams& p, ad::Var x, double curvature);

// weights: T x m, points: m x (n+1). Row i of the result is
// sum_j w_ij y_j / (sqrt(-K) |‖sum_k w_ik y_k‖_L|).
ad::Var hyper_agg_rows(ad::Var weights, ad::Var points, double curvature);

// LeakyReLU + dropout on the spatial part, time coordinate recomputed.
ad::Var hyperbolic_activation(ForwardContext& ctx, ad::Var x, double slope, double dropout_rate, double curvature);

// concat: T x L -> scores T x 1.
ad::Var classifier_rows(ForwardContext& ctx, const ClassifierParams& p, ad::Var concat);

// ---------------------------------------------------------------------------
// Single-point forms.

lorentz::LorentzPoint hl_forward(const HyperbolicLinearParams& p, const lorentz::LorentzPoint& x, Mode mode,
                                 std::mt19937_64* rng = nullptr);

lorentz::LorentzPoint hyper_agg(const Vector& weights, const std::vector<lorentz::LorentzPoint>& points);

double classifier_forward(const ClassifierParams& p, const Vector& concat);

}  // namespace hypervd::nn
