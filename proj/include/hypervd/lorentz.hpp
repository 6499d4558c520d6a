#pragma once

// Lorentz (hyperboloid) model of hyperbolic space with constant curvature
// K < 0. A point x lives in Minkowski space R^{n+1} on the upper sheet
// <x,x>_L = 1/K, x_0 > 0. All math here is in double precision.

#include <Eigen/Dense>

namespace hypervd::lorentz {

using Vector = Eigen::VectorXd;

class Curvature {
 public:
  // Throws ConfigError unless k < 0.
  explicit Curvature(double k = -1.0);

  double value() const { return k_; }
  // sqrt(-K)
  double sqrt_neg() const { return sqrt_neg_; }

  friend bool operator==(const Curvature& a, const Curvature& b) { return a.k_ == b.k_; }

 private:
  double k_;
  double sqrt_neg_;
};

// -x0*y0 + sum_{i>=1} xi*yi. Throws DimensionError on length mismatch or
// length < 2.
double minkowski_inner(const Vector& x, const Vector& y);

// sqrt(|<z,z>_L|). The absolute value keeps the norm defined for time-like
// vectors such as weighted sums of manifold points.
double lorentz_norm(const Vector& z);

class LorentzPoint {
 public:
  // Validates <x,x>_L = 1/K (tolerance relative to max(|1/K|, |x|^2)) and x_0 > 0; throws
  // NumericalError otherwise.
  LorentzPoint(Vector coords, Curvature curvature, double rel_tol = 1e-6);

  const Vector& coords() const { return coords_; }
  const Curvature& curvature() const { return curvature_; }
  // Ambient dimension n+1.
  Eigen::Index size() const { return coords_.size(); }
  // |<x,x>_L - 1/K|
  double residual() const;

 private:
  Vector coords_;
  Curvature curvature_;
};

class TangentVector {
 public:
  // Validates <base, coords>_L = 0 within rel_tol (scaled by the magnitudes
  // involved); throws NumericalError otherwise.
  TangentVector(LorentzPoint base, Vector coords, double rel_tol = 1e-6);

  const LorentzPoint& base() const { return base_; }
  const Vector& coords() const { return coords_; }

 private:
  LorentzPoint base_;
  Vector coords_;
};

// (sqrt(-1/K), 0, ..., 0) with n spatial coordinates.
LorentzPoint origin(Eigen::Index n, Curvature k);

LorentzPoint exp_map(const LorentzPoint& x, const TangentVector& z);

TangentVector log_map(const LorentzPoint& x, const LorentzPoint& y);

// arccosh(max(K<x,y>_L, 1))
double geodesic_distance(const LorentzPoint& x, const LorentzPoint& y);

// exp_o((0, v)) for a Euclidean vector v of length n; returns length n+1.
LorentzPoint lift_to_manifold(const Vector& v, Curvature k);

}  // namespace hypervd::lorentz
