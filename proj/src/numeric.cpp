#include "hypervd/numeric.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "hypervd/error.hpp"

namespace hypervd {

Matrix masked_row_softmax(const Matrix& logits, double tau) {
  const bool square = logits.rows() == logits.cols();
  Matrix out = Matrix::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      if (logits(i, j) > tau || (square && i == j)) mx = std::max(mx, logits(i, j));
    }
    if (!std::isfinite(mx)) continue;  // fully masked row
    double z = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      if (logits(i, j) > tau || (square && i == j)) {
        out(i, j) = std::exp(logits(i, j) - mx);
        z += out(i, j);
      }
    }
    out.row(i) /= z;
  }
  return out;
}

Eigen::Index kmax_count(Eigen::Index t, int q) {
  if (t < 1) throw DimensionError("mil: empty score vector");
  if (q < 1) throw ConfigError("mil: q must be >= 1");
  return std::min<Eigen::Index>(t / q + 1, t);
}

std::vector<Eigen::Index> kmax_indices(const Vector& scores, Eigen::Index k) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });
  idx.resize(static_cast<std::size_t>(std::min<Eigen::Index>(k, scores.size())));
  return idx;
}

}  // namespace hypervd
