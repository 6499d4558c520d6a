#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "hypervd/lorentz.hpp"
#include "hypervd/numeric.hpp"

namespace testing {

using hypervd::Matrix;
using hypervd::Vector;
namespace lz = hypervd::lorentz;

inline Vector normal_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

inline Matrix normal_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

// Random manifold point whose spatial part has norm at most max_norm
// before the lift.
inline lz::LorentzPoint random_point(Eigen::Index n, lz::Curvature k, std::mt19937_64& rng, double max_norm = 2.0) {
  Vector v = normal_vector(n, rng);
  std::uniform_real_distribution<double> r(0.0, max_norm);
  v *= r(rng) / std::max(v.norm(), 1e-12);
  return lz::lift_to_manifold(v, k);
}

// Random tangent vector at x with Lorentz norm in [0, max_norm].
inline lz::TangentVector random_tangent(const lz::LorentzPoint& x, std::mt19937_64& rng, double max_norm = 5.0) {
  const Vector u = normal_vector(x.size(), rng);
  const double k = x.curvature().value();
  Vector z = u - k * lz::minkowski_inner(x.coords(), u) * x.coords();
  const double n = std::sqrt(std::abs(lz::minkowski_inner(z, z)));
  std::uniform_real_distribution<double> r(0.0, max_norm);
  if (n > 0) z *= r(rng) / n;
  return lz::TangentVector(x, z);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hypervd_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Frame AP by definition: for each positive, the fraction of positives
// among the items ranked at or above it. Rank order is descending score,
// then ascending index; computed by pairwise comparison without sorting.
inline double brute_force_ap(const std::vector<double>& s, const std::vector<int>& y) {
  const std::size_t n = s.size();
  auto above = [&](std::size_t j, std::size_t i) { return s[j] > s[i] || (s[j] == s[i] && j < i); };
  double total = 0.0;
  int npos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 1) continue;
    ++npos;
    int rank = 1, hits = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !above(j, i)) continue;
      ++rank;
      hits += y[j] == 1;
    }
    total += static_cast<double>(hits) / rank;
  }
  return total / npos;
}

}  // namespace testing
