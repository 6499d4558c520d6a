#include <doctest.h>

#include <cmath>
#include <random>

#include "hypervd/error.hpp"
#include "hypervd/hyper_nn.hpp"
#include "support.hpp"

using namespace hypervd;
using namespace hypervd::nn;
using lorentz::Curvature;
using lorentz::LorentzPoint;

namespace {

HyperbolicLinearParams random_layer(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng, double dropout = 0.0) {
  HyperbolicLinearParams p = init_hyperbolic_linear(in, out, dropout, 0.01, rng);
  p.b = testing::normal_vector(out, rng, 0.3);
  p.b_gate = testing::normal_vector(1, rng)[0];
  std::uniform_real_distribution<double> lam(0.2, 3.0);
  p.lambda = lam(rng);
  return p;
}

}  // namespace

TEST_CASE("hl_forward stays on the manifold") {
  std::mt19937_64 rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Curvature k(trial % 2 ? -1.0 : -0.5);
    const auto p = random_layer(6, 4, rng);
    const auto x = testing::random_point(5, k, rng, 3.0);
    const auto y = hl_forward(p, x, Mode::eval);
    CHECK(y.size() == 5);
    worst = std::max(worst, y.residual());
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("hl_forward with unit phi") {
  // v = 0, b' = 0 gives a gate of 1/2; lambda = 2 makes phi the unit
  // direction of W h(x) + b.
  HyperbolicLinearParams p;
  p.W = Matrix::Zero(3, 3);
  p.v = Vector::Zero(3);
  p.b = Vector::Zero(3);
  p.b(0) = 5.0;
  p.lambda = 2.0;
  const auto y = hl_forward(p, lorentz::origin(2, Curvature(-1)), Mode::eval);
  CHECK(y.coords()[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(y.coords()[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(y.coords()[2] == 0.0);
  CHECK(y.coords()[3] == 0.0);
}

TEST_CASE("hl_forward in eval mode ignores dropout") {
  std::mt19937_64 rng(32);
  auto p = random_layer(5, 3, rng, 0.6);
  auto q = p;
  q.dropout_rate = 0.0;
  const auto x = testing::random_point(4, Curvature(-1), rng);
  std::mt19937_64 drop(1);
  CHECK(hl_forward(p, x, Mode::eval, &drop).coords() == hl_forward(q, x, Mode::eval).coords());
  CHECK(hl_forward(p, x, Mode::eval).coords() == hl_forward(p, x, Mode::eval).coords());
  // Train mode does draw from the stream.
  std::mt19937_64 a(5), b(5);
  CHECK(hl_forward(p, x, Mode::train, &a).coords() == hl_forward(p, x, Mode::train, &b).coords());
  CHECK_THROWS_AS(hl_forward(p, x, Mode::train), ConfigError);
}

TEST_CASE("hl_forward error cases") {
  std::mt19937_64 rng(33);
  auto p = random_layer(4, 3, rng);
  const auto x = testing::random_point(3, Curvature(-1), rng);
  auto zero = p;
  zero.W.setZero();
  zero.b.setZero();
  CHECK_THROWS_AS(hl_forward(zero, x, Mode::eval), NumericalError);
  auto neg = p;
  neg.lambda = 0.0;
  CHECK_THROWS_AS(hl_forward(neg, x, Mode::eval), NumericalError);
  CHECK_THROWS_AS(hl_forward(p, testing::random_point(5, Curvature(-1), rng), Mode::eval), DimensionError);
}

TEST_CASE("hyper_agg examples") {
  std::mt19937_64 rng(34);
  const Curvature k(-1);
  const auto a = testing::random_point(3, k, rng);
  const Vector one = Vector::Constant(1, 1.0);
  CHECK((hyper_agg(one, {a}).coords() - a.coords()).cwiseAbs().maxCoeff() < 1e-14);
  Vector half(2);
  half << 0.5, 0.5;
  CHECK((hyper_agg(half, {a, a}).coords() - a.coords()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(hyper_agg(Vector::Zero(2), {a, a}), NumericalError);
  CHECK_THROWS_AS(hyper_agg(half, {a}), DimensionError);
}

TEST_CASE("hyper_agg stays on the manifold") {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Curvature k(trial % 2 ? -1.0 : -2.0);
    std::vector<LorentzPoint> pts;
    Vector weights(4);
    for (int j = 0; j < 4; ++j) {
      pts.push_back(testing::random_point(3, k, rng, 3.0));
      weights[j] = w(rng);
    }
    weights[trial % 4] = std::max(weights[trial % 4], 1e-6);
    worst = std::max(worst, hyper_agg(weights, pts).residual());
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("classifier examples and properties") {
  ClassifierParams p;
  p.W = Vector::Zero(4);
  p.W << 1.0, 0.5, -0.2, 0.3;
  Vector c(4);
  c << 0.0, 0.0, 0.0, 0.0;
  CHECK(classifier_forward(p, c) == doctest::Approx(0.880797).epsilon(1e-6));
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = testing::normal_vector(4, rng, 3.0);
    const double s = classifier_forward(p, x);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    // Odd symmetry in the first argument of the Lorentzian form.
    const double inner = -x[0] * p.W[0] + x.tail(3).dot(p.W.tail(3));
    CHECK(classifier_forward(p, -x) == doctest::Approx(sigmoid(p.epsilon - p.epsilon * inner)).epsilon(1e-12));
    // Monotone along the direction that raises the inner product.
    Vector dir = p.W;
    dir[0] = -dir[0];
    CHECK(classifier_forward(p, x + 0.1 * dir) > classifier_forward(p, x));
  }
  CHECK_THROWS_AS(classifier_forward(p, Vector::Zero(3)), DimensionError);
}

TEST_CASE("initialisation") {
  std::mt19937_64 a(9), b(9);
  const auto p = init_hyperbolic_linear(7, 5, 0.0, 0.01, a);
  const auto q = init_hyperbolic_linear(7, 5, 0.0, 0.01, b);
  CHECK(p.W == q.W);
  CHECK(p.v == q.v);
  CHECK(p.b.isZero(0.0));
  CHECK(p.b_gate == 0.0);
  CHECK(p.lambda == 1.0);
  std::mt19937_64 rng(10);
  const Matrix w = xavier_uniform(100, 100, 100, 100, rng);
  const double a_lim = std::sqrt(6.0 / 200.0);
  CHECK(w.cwiseAbs().maxCoeff() <= a_lim);
  const double sigma = a_lim / std::sqrt(3.0);
  CHECK(std::abs(w.mean()) <= 3 * sigma / std::sqrt(1e4));
  CHECK(init_linear(100, 100, rng).b.isZero(0.0));
}

TEST_CASE("parameter counts") {
  std::mt19937_64 rng(11);
  CHECK(count_parameters(init_linear(2, 3, rng)) == 9);
  CHECK(count_parameters(init_hyperbolic_linear(257, 32, 0.0, 0.01, rng)) == 32 * 257 + 257 + 32 + 2);
  CHECK(count_parameters(init_classifier(66, 2.0, rng)) == 67);
}
