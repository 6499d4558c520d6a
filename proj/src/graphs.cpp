#include "hypervd/graphs.hpp"

#include <cmath>

#include <fmt/core.h>

#include "hypervd/autodiff.hpp"
#include "hypervd/error.hpp"

namespace hypervd::graphs {

void GraphConfig::validate() const {
  if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError(fmt::format("graphs: tau must lie in [0, 1), got {}", tau));
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError(fmt::format("graphs: gamma must be > 0, got {}", gamma));
}

AdjacencyMatrix hfsg_adjacency(const Matrix& points, lorentz::Curvature k, double tau) {
  GraphConfig{tau, 1.0}.validate();
  if (points.rows() < 1) throw DimensionError("graphs: need at least one snippet");
  ad::Tape tape;
  ad::Var g = ad::hyperbolic_similarity(tape.constant(points), k.value());
  return {masked_row_softmax(g.value(), tau), GraphKind::similarity};
}

AdjacencyMatrix hfsg_adjacency(const std::vector<lorentz::LorentzPoint>& points, double tau) {
  if (points.empty()) throw DimensionError("graphs: need at least one snippet");
  Matrix m(static_cast<Eigen::Index>(points.size()), points.front().size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != m.cols() || !(points[i].curvature() == points.front().curvature())) {
      throw DimensionError("graphs: points differ in dimension or curvature");
    }
    m.row(static_cast<Eigen::Index>(i)) = points[i].coords().transpose();
  }
  return hfsg_adjacency(m, points.front().curvature(), tau);
}

AdjacencyMatrix htrg_adjacency(Eigen::Index t, double gamma) {
  GraphConfig{0.0, gamma}.validate();
  if (t < 1) throw DimensionError("graphs: need at least one snippet");
  Matrix a(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      a(i, j) = std::exp(-std::pow(static_cast<double>(std::abs(i - j)), gamma));
    }
  }
  return {std::move(a), GraphKind::temporal};
}

}  // namespace hypervd::graphs
