#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hypervd/error.hpp"
#include "hypervd/graphs.hpp"
#include "support.hpp"

using namespace hypervd;
using namespace hypervd::graphs;
using lorentz::Curvature;
using lorentz::LorentzPoint;

namespace {

std::vector<LorentzPoint> random_points(int t, std::mt19937_64& rng) {
  std::vector<LorentzPoint> pts;
  for (int i = 0; i < t; ++i) pts.push_back(testing::random_point(3, Curvature(-1), rng, 1.5));
  return pts;
}

Eigen::Index nonzeros(const Matrix& m) { return (m.array() != 0.0).count(); }

}  // namespace

TEST_CASE("hfsg examples") {
  std::mt19937_64 rng(41);
  const auto p = testing::random_point(3, Curvature(-1), rng);
  const auto a = hfsg_adjacency(std::vector<LorentzPoint>(4, p), 0.5);
  CHECK(a.kind == GraphKind::similarity);
  CHECK((a.weights.array() - 0.25).abs().maxCoeff() < 1e-15);
  CHECK(hfsg_adjacency({p}, 0.7).weights == Matrix::Constant(1, 1, 1.0));

  // Two points one unit apart: g = [[1, 1/e], [1/e, 1]], no entry masked.
  Vector y(3);
  y << std::cosh(1.0), std::sinh(1.0), 0.0;
  const auto two = hfsg_adjacency({lorentz::origin(2, Curvature(-1)), LorentzPoint(y, Curvature(-1))}, 0.3);
  const double e = std::exp(1.0);
  const double expected = std::exp(1.0 / e) / (e + std::exp(1.0 / e));
  CHECK(two.weights(0, 1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(two.weights(1, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(two.weights(0, 1) - 0.3467) < 5e-4);
}

TEST_CASE("hfsg rows are distributions with exact zeros") {
  std::mt19937_64 rng(42);
  for (double tau : {0.0, 0.3, 0.7, 0.95}) {
    const auto pts = random_points(9, rng);
    const Matrix a = hfsg_adjacency(pts, tau).weights;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      CHECK(a.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(a.row(i).minCoeff() >= 0.0);
      CHECK(a(i, i) > 0.0);
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double g = std::exp(-lorentz::geodesic_distance(pts[i], pts[j]));
        if (i != j && g <= tau) CHECK(a(i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("hfsg is permutation equivariant") {
  std::mt19937_64 rng(43);
  const auto pts = random_points(7, rng);
  std::vector<int> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<LorentzPoint> permuted;
  for (int i : perm) permuted.push_back(pts[i]);
  const Matrix a = hfsg_adjacency(pts, 0.4).weights;
  const Matrix b = hfsg_adjacency(permuted, 0.4).weights;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) CHECK(b(i, j) == doctest::Approx(a(perm[i], perm[j])).epsilon(1e-14));
}

TEST_CASE("raising tau never adds edges") {
  std::mt19937_64 rng(44);
  const auto pts = random_points(12, rng);
  Eigen::Index prev = nonzeros(hfsg_adjacency(pts, 0.0).weights);
  for (double tau = 0.05; tau < 1.0; tau += 0.05) {
    const Eigen::Index n = nonzeros(hfsg_adjacency(pts, tau).weights);
    CHECK(n <= prev);
    prev = n;
  }
  CHECK(prev >= 12);
}

TEST_CASE("htrg examples and properties") {
  const auto a = htrg_adjacency(6, 1.0);
  CHECK(a.kind == GraphKind::temporal);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(a.weights(i, i) == 1.0);
  CHECK(a.weights(2, 3) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(a.weights.isApprox(a.weights.transpose(), 0.0));
  for (Eigen::Index i = 1; i < 6; ++i)
    for (Eigen::Index j = 1; j < 6; ++j) CHECK(a.weights(i, j) == a.weights(i - 1, j - 1));
  for (double gamma : {0.5, 1.0, 2.0}) {
    const Matrix w = htrg_adjacency(8, gamma).weights;
    for (Eigen::Index d = 1; d < 8; ++d) CHECK(w(0, d) < w(0, d - 1));
  }
}

TEST_CASE("graph config validation") {
  CHECK_THROWS_AS((GraphConfig{1.0, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((GraphConfig{-0.1, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((GraphConfig{0.5, 0.0}.validate()), ConfigError);
  CHECK_NOTHROW((GraphConfig{}.validate()));
  CHECK_THROWS_AS(htrg_adjacency(0, 1.0), DimensionError);
}
