#pragma once

// Snippet relation graphs: feature similarity measured by Lorentzian
// distance, and temporal proximity exp(-|i-j|^gamma).

#include <vector>

#include "hypervd/lorentz.hpp"
#include "hypervd/numeric.hpp"

namespace hypervd::graphs {

enum class GraphKind { similarity, temporal };

struct AdjacencyMatrix {
  Matrix weights;  // T x T
  GraphKind kind;
};

struct GraphConfig {
  double tau = 0.7;    // similarity threshold, [0, 1)
  double gamma = 1.0;  // temporal decay exponent, > 0

  // Throws ConfigError when out of range.
  void validate() const;
};

// Rows are softmax-normalised over the pairs whose similarity
// exp(-d_L(x_i, x_j)) exceeds tau; every other entry is exactly 0.
AdjacencyMatrix hfsg_adjacency(const std::vector<lorentz::LorentzPoint>& points, double tau);
// Same, for manifold rows stacked in a matrix.
AdjacencyMatrix hfsg_adjacency(const Matrix& points, lorentz::Curvature k, double tau);

// A(i,j) = exp(-|i-j|^gamma), unnormalised.
AdjacencyMatrix htrg_adjacency(Eigen::Index t, double gamma);

}  // namespace hypervd::graphs
