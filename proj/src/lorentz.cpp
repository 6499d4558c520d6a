#include "hypervd/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <fmt/core.h>

#include "hypervd/error.hpp"

namespace hypervd::lorentz {

namespace {

constexpr double kZeroTangent = 1e-12;

void require_same_curvature(const LorentzPoint& x, const LorentzPoint& y) {
  if (!(x.curvature() == y.curvature())) {
    throw ConfigError("lorentz: points have different curvature");
  }
  if (x.size() != y.size()) {
    throw DimensionError(fmt::format("lorentz: dimension mismatch {} vs {}", x.size(), y.size()));
  }
}

}  // namespace

Curvature::Curvature(double k) : k_(k), sqrt_neg_(std::sqrt(-k)) {
  if (!(k < 0.0) || !std::isfinite(k)) {
    throw ConfigError(fmt::format("lorentz: curvature must be negative and finite, got {}", k));
  }
}

double minkowski_inner(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw DimensionError(fmt::format("lorentz: inner product length mismatch {} vs {}", x.size(), y.size()));
  }
  if (x.size() < 2) {
    throw DimensionError("lorentz: ambient vectors need at least 2 coordinates");
  }
  const Eigen::Index n = x.size() - 1;
  return -x[0] * y[0] + x.tail(n).dot(y.tail(n));
}

double lorentz_norm(const Vector& z) {
  if (z.size() == 0) return 0.0;
  double s = -z[0] * z[0] + z.tail(z.size() - 1).squaredNorm();
  return std::sqrt(std::abs(s));
}

LorentzPoint::LorentzPoint(Vector coords, Curvature curvature, double rel_tol)
    : coords_(std::move(coords)), curvature_(curvature) {
  if (coords_.size() < 2) {
    throw DimensionError("lorentz: a point needs at least 2 ambient coordinates");
  }
  if (!coords_.allFinite() || !(coords_[0] > 0.0)) {
    throw NumericalError("lorentz: point is not on the upper sheet");
  }
  const double target = 1.0 / curvature_.value();
  // Far from the origin the two squared terms cancel, so the rounding error
  // grows with |x|^2 rather than with 1/K.
  if (residual() > rel_tol * std::max(std::abs(target), coords_.squaredNorm())) {
    throw NumericalError(fmt::format("lorentz: point off manifold, <x,x> = {} (expected {})",
                                     minkowski_inner(coords_, coords_), target));
  }
}

double LorentzPoint::residual() const {
  return std::abs(minkowski_inner(coords_, coords_) - 1.0 / curvature_.value());
}

TangentVector::TangentVector(LorentzPoint base, Vector coords, double rel_tol)
    : base_(std::move(base)), coords_(std::move(coords)) {
  if (coords_.size() != base_.size()) {
    throw DimensionError(fmt::format("lorentz: tangent length {} does not match base {}",
                                     coords_.size(), base_.size()));
  }
  // Scale by the magnitudes so that far-from-origin bases are not rejected
  // for ordinary rounding.
  const double scale = std::max(1.0, base_.coords().norm() * coords_.norm());
  if (std::abs(minkowski_inner(base_.coords(), coords_)) > rel_tol * scale) {
    throw NumericalError("lorentz: vector is not tangent at its base point");
  }
}

LorentzPoint origin(Eigen::Index n, Curvature k) {
  if (n < 1) throw DimensionError("lorentz: origin needs n >= 1");
  Vector o = Vector::Zero(n + 1);
  o[0] = std::sqrt(-1.0 / k.value());
  return LorentzPoint(std::move(o), k);
}

LorentzPoint exp_map(const LorentzPoint& x, const TangentVector& z) {
  if (!(z.base().curvature() == x.curvature()) || z.coords().size() != x.size()) {
    throw DimensionError("lorentz: tangent vector does not belong to this point");
  }
  const double c = x.curvature().sqrt_neg();
  const double r = lorentz_norm(z.coords());
  if (r < kZeroTangent) return x;
  const double t = c * r;
  Vector y = std::cosh(t) * x.coords() + (std::sinh(t) / t) * z.coords();
  return LorentzPoint(std::move(y), x.curvature());
}

TangentVector log_map(const LorentzPoint& x, const LorentzPoint& y) {
  require_same_curvature(x, y);
  const double k = x.curvature().value();
  const double c = x.curvature().sqrt_neg();
  // u = y - K<x,y> x is the tangent direction; ||u||_L = sinh(c d)/c with d
  // the geodesic length, so asinh recovers d without arccosh's loss near 0.
  Vector u = y.coords() - (k * minkowski_inner(x.coords(), y.coords())) * x.coords();
  const double un = lorentz_norm(u);
  if (un < kZeroTangent) {
    return TangentVector(x, Vector::Zero(x.size()));
  }
  const double d = std::asinh(c * un) / c;
  return TangentVector(x, (d / un) * u);
}

double geodesic_distance(const LorentzPoint& x, const LorentzPoint& y) {
  require_same_curvature(x, y);
  const double arg = x.curvature().value() * minkowski_inner(x.coords(), y.coords());
  return std::acosh(std::max(arg, 1.0));
}

LorentzPoint lift_to_manifold(const Vector& v, Curvature k) {
  if (!v.allFinite()) throw NumericalError("lorentz: lift input has non-finite entries");
  LorentzPoint o = origin(v.size(), k);
  Vector z = Vector::Zero(v.size() + 1);
  z.tail(v.size()) = v;
  return exp_map(o, TangentVector(o, std::move(z)));
}

}  // namespace hypervd::lorentz
