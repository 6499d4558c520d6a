#pragma once

// Small dense helpers shared by the differentiable ops and the plain
// (value-only) entry points.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace hypervd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

// Row softmax of `logits` restricted to entries > tau; the diagonal of a
// square input always survives. Masked entries are exactly 0.
Matrix masked_row_softmax(const Matrix& logits, double tau);

// k = floor(T/q) + 1 clipped to T.
Eigen::Index kmax_count(Eigen::Index t, int q);

// Indices of the k largest values, descending; equal values keep their
// original index order.
std::vector<Eigen::Index> kmax_indices(const Vector& scores, Eigen::Index k);

}  // namespace hypervd
