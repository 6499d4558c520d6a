#include "hypervd/hyper_nn.hpp"

#include <cmath>
#include <utility>

#include <fmt/core.h>

#include "hypervd/error.hpp"

namespace hypervd::nn {

using ad::Var;

ForwardContext::ForwardContext(ad::Tape& tape, Mode mode, std::mt19937_64* rng, bool track_grads)
    : tape_(tape), mode_(mode), rng_(rng), track_grads_(track_grads) {}

Var ForwardContext::bind(const void* key, Matrix value) {
  if (auto it = leaves_.find(key); it != leaves_.end()) return it->second;
  Var v = track_grads_ ? tape_.leaf(std::move(value)) : tape_.constant(std::move(value));
  leaves_.emplace(key, v);
  return v;
}

Var ForwardContext::param(const Matrix& m) { return bind(m.data(), m); }

Var ForwardContext::param(const Vector& v) { return bind(v.data(), Matrix(v)); }

Var ForwardContext::param(const double& s) { return bind(&s, Matrix::Constant(1, 1, s)); }

const Var* ForwardContext::find(const void* storage) const {
  auto it = leaves_.find(storage);
  return it == leaves_.end() ? nullptr : &it->second;
}

Var ForwardContext::dropout(Var x, double rate) {
  if (mode_ == Mode::eval || rate <= 0.0) return x;
  if (rate >= 1.0) throw ConfigError("hyper_nn: dropout rate must be < 1");
  if (rng_ == nullptr) throw ConfigError("hyper_nn: train-mode dropout needs a random stream");
  std::bernoulli_distribution keep(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < mask.cols(); ++j) {
    for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(*rng_) ? s : 0.0;
  }
  return ad::cmul(x, tape_.constant(std::move(mask)));
}

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Eigen::Index fan_out,
                      std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix m(rows, cols);
  // Row-major fill so the draw order matches the printed layout.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

LinearParams init_linear(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
  if (in < 1 || out < 1) throw ConfigError(fmt::format("hyper_nn: linear layer {} -> {} has a zero dimension", in, out));
  return LinearParams{xavier_uniform(out, in, in, out, rng), Vector::Zero(out)};
}

HyperbolicLinearParams init_hyperbolic_linear(Eigen::Index in, Eigen::Index out, double dropout_rate,
                                              double leaky_slope, std::mt19937_64& rng) {
  if (in < 2 || out < 1) {
    throw ConfigError(fmt::format("hyper_nn: hyperbolic layer {} -> {} has a zero dimension", in, out));
  }
  HyperbolicLinearParams p;
  p.W = xavier_uniform(out, in, in, out, rng);
  p.v = xavier_uniform(in, 1, in, 1, rng).col(0);
  p.b = Vector::Zero(out);
  p.b_gate = 0.0;
  p.lambda = 1.0;
  p.dropout_rate = dropout_rate;
  p.leaky_slope = leaky_slope;
  return p;
}

ClassifierParams init_classifier(Eigen::Index in, double epsilon, std::mt19937_64& rng) {
  if (in < 2) throw ConfigError("hyper_nn: classifier input needs at least 2 coordinates");
  return ClassifierParams{xavier_uniform(in, 1, in, 1, rng).col(0), 0.0, epsilon};
}

std::size_t count_parameters(const LinearParams& p) { return static_cast<std::size_t>(p.W.size() + p.b.size()); }

std::size_t count_parameters(const HyperbolicLinearParams& p) {
  return static_cast<std::size_t>(p.W.size() + p.v.size() + p.b.size()) + 2;
}

std::size_t count_parameters(const ClassifierParams& p) { return static_cast<std::size_t>(p.W.size()) + 1; }

namespace {

ParamRef matrix_ref(std::string name, Matrix& m) { return {std::move(name), m.data(), m.rows(), m.cols(), 2}; }
ParamRef vector_ref(std::string name, Vector& v) { return {std::move(name), v.data(), v.size(), 1, 1}; }
ParamRef scalar_ref(std::string name, double& s) { return {std::move(name), &s, 1, 1, 0}; }

}  // namespace

void append_params(std::vector<ParamRef>& out, const std::string& prefix, LinearParams& p) {
  out.push_back(matrix_ref(prefix + ".W", p.W));
  out.push_back(vector_ref(prefix + ".b", p.b));
}

void append_params(std::vector<ParamRef>& out, const std::string& prefix, HyperbolicLinearParams& p) {
  out.push_back(matrix_ref(prefix + ".W", p.W));
  out.push_back(vector_ref(prefix + ".v", p.v));
  out.push_back(vector_ref(prefix + ".b", p.b));
  out.push_back(scalar_ref(prefix + ".b_gate", p.b_gate));
  out.push_back(scalar_ref(prefix + ".lambda", p.lambda));
}

void append_params(std::vector<ParamRef>& out, const std::string& prefix, ClassifierParams& p) {
  out.push_back(vector_ref(prefix + ".W", p.W));
  out.push_back(scalar_ref(prefix + ".b", p.b));
}

Var with_time(Var spatial, double curvature) {
  Var t = ad::sqrt(ad::add_const(ad::row_sq_norm(spatial), -1.0 / curvature));
  return ad::hcat({t, spatial});
}

Var linear_rows(ForwardContext& ctx, const LinearParams& p, Var x) {
  return ad::linear(x, ctx.param(p.W), ctx.param(p.b));
}

Var hl_rows(ForwardContext& ctx, const HyperbolicLinearParams& p, Var x, double curvature) {
  if (x.cols() != p.in_dim()) {
    throw DimensionError(fmt::format("hyper_nn: layer expects {} coordinates, got {}", p.in_dim(), x.cols()));
  }
  if (!(p.lambda > 0.0)) throw NumericalError(fmt::format("hyper_nn: lambda must be > 0, got {}", p.lambda));
  // Dropout and h act on the spatial coordinates only; the time coordinate
  // (>= 1 on the manifold) is kept so a fully dropped row is not degenerate.
  Var time = ad::cols(x, 0, 1);
  Var xin = ad::hcat({time, ctx.dropout(ad::cols(x, 1, x.cols() - 1), p.dropout_rate)});
  Var hx = ad::hcat({time, ad::leaky_relu(ad::cols(xin, 1, xin.cols() - 1), p.leaky_slope)});
  Var z = ad::linear(hx, ctx.param(p.W), ctx.param(p.b));
  Var zn = ad::sqrt(ad::row_sq_norm(z));
  for (Eigen::Index i = 0; i < zn.rows(); ++i) {
    if (!(zn.value()(i, 0) > 1e-12)) {
      throw NumericalError(fmt::format("hyper_nn: degenerate direction, |W h(x) + b| = 0 at row {}", i));
    }
  }
  Var gate = ad::sigmoid(ad::add_scalar(ad::matmul(xin, ctx.param(p.v)), ctx.param(p.b_gate)));
  Var coef = ad::mul_scalar(ad::div_col(gate, zn), ctx.param(p.lambda));
  return with_time(ad::mul_col(z, coef), curvature);
}

Var hyper_agg_rows(Var weights, Var points, double curvature) {
  Var m = ad::matmul(weights, points);
  Var inner = ad::lorentz_rows(m, m);
  for (Eigen::Index i = 0; i < inner.rows(); ++i) {
    const double s = inner.value()(i, 0);
    if (!(s < 0.0) || std::abs(s) < 1e-300) {
      throw NumericalError(
          fmt::format("hyper_agg: weighted sum of row {} is not time-like (<m,m>_L = {})", i, s));
    }
  }
  Var denom = ad::scale(ad::sqrt(ad::abs(inner)), std::sqrt(-curvature));
  return ad::div_col(m, denom);
}

Var hyperbolic_activation(ForwardContext& ctx, Var x, double slope, double dropout_rate, double curvature) {
  Var sp = ctx.dropout(ad::leaky_relu(ad::cols(x, 1, x.cols() - 1), slope), dropout_rate);
  return with_time(sp, curvature);
}

Var classifier_rows(ForwardContext& ctx, const ClassifierParams& p, Var concat) {
  if (concat.cols() != p.W.size()) {
    throw DimensionError(fmt::format("classifier: input length {} does not match weights {}", concat.cols(), p.W.size()));
  }
  Var inner = ad::matmul(concat, ad::flip_time(ctx.param(p.W)));
  Var logit = ad::add_scalar(ad::add_const(ad::scale(inner, p.epsilon), p.epsilon), ctx.param(p.b));
  return ad::sigmoid(logit);
}

lorentz::LorentzPoint hl_forward(const HyperbolicLinearParams& p, const lorentz::LorentzPoint& x, Mode mode,
                                 std::mt19937_64* rng) {
  ad::Tape tape;
  ForwardContext ctx(tape, mode, rng, false);
  Var y = hl_rows(ctx, p, tape.constant(x.coords().transpose()), x.curvature().value());
  return lorentz::LorentzPoint(y.value().row(0).transpose(), x.curvature());
}

lorentz::LorentzPoint hyper_agg(const Vector& weights, const std::vector<lorentz::LorentzPoint>& points) {
  if (points.empty() || weights.size() != static_cast<Eigen::Index>(points.size())) {
    throw DimensionError("hyper_agg: need one weight per point");
  }
  const lorentz::Curvature k = points.front().curvature();
  Matrix ys(static_cast<Eigen::Index>(points.size()), points.front().size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (!(points[j].curvature() == k) || points[j].size() != ys.cols()) {
      throw DimensionError("hyper_agg: points differ in curvature or dimension");
    }
    ys.row(static_cast<Eigen::Index>(j)) = points[j].coords().transpose();
  }
  if (!weights.allFinite()) throw NumericalError("hyper_agg: non-finite weights");
  ad::Tape tape;
  Var out = hyper_agg_rows(tape.constant(weights.transpose()), tape.constant(std::move(ys)), k.value());
  return lorentz::LorentzPoint(out.value().row(0).transpose(), k);
}

double classifier_forward(const ClassifierParams& p, const Vector& concat) {
  if (concat.size() != p.W.size()) {
    throw DimensionError(fmt::format("classifier: input length {} does not match weights {}", concat.size(), p.W.size()));
  }
  const double inner = -concat[0] * p.W[0] + concat.tail(concat.size() - 1).dot(p.W.tail(p.W.size() - 1));
  return sigmoid((p.epsilon + p.epsilon * inner) + p.b);
}

}  // namespace hypervd::nn
