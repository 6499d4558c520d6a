#include <doctest.h>

#include <functional>
#include <random>

#include "hypervd/autodiff.hpp"
#include "support.hpp"

using namespace hypervd;
using ad::Tape;
using ad::Var;

namespace {

using Op = std::function<Var(Tape&, Var)>;

// Scalar probe sum(op(x) .* r) so every output entry contributes.
double probe(const Op& op, const Matrix& x, const Matrix& r, Matrix* grad) {
  Tape t;
  Var in = t.leaf(x);
  Var out = op(t, in);
  REQUIRE(out.rows() == r.rows());
  REQUIRE(out.cols() == r.cols());
  Var w = ad::cmul(out, t.constant(r));
  Var s = ad::matmul(ad::matmul(t.constant(Matrix::Ones(1, r.rows())), w), t.constant(Matrix::Ones(r.cols(), 1)));
  if (grad) {
    t.backward(s);
    *grad = t.grad(in);
  }
  return s.scalar();
}

double max_fd_error(const Op& op, const Matrix& x, std::mt19937_64& rng) {
  Tape t;
  const Matrix shape = op(t, t.constant(x)).value();
  const Matrix r = testing::normal_matrix(shape.rows(), shape.cols(), rng);
  Matrix g;
  probe(op, x, r, &g);
  double worst = 0.0;
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Matrix xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      const double num = (probe(op, xp, r, nullptr) - probe(op, xm, r, nullptr)) / (2 * h);
      const double err = std::abs(num - g(i, j)) / std::max({std::abs(num), std::abs(g(i, j)), 1e-6});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

Matrix manifold_rows(Eigen::Index t, Eigen::Index n, std::mt19937_64& rng, double k = -1.0) {
  Matrix m(t, n + 1);
  for (Eigen::Index i = 0; i < t; ++i) {
    m.row(i) = testing::random_point(n, lorentz::Curvature(k), rng).coords().transpose();
  }
  return m;
}

}  // namespace

TEST_CASE("tape basics") {
  Tape t;
  Var a = t.leaf(Matrix::Constant(1, 1, 3.0));
  Var b = t.constant(Matrix::Constant(1, 1, 4.0));
  Var c = ad::cmul(a, b);
  t.backward(c);
  CHECK(t.grad(a)(0, 0) == 4.0);
  CHECK(t.grad(b)(0, 0) == 0.0);
  CHECK_FALSE(t.requires_grad(b));
}

TEST_CASE("elementwise ops match finite differences") {
  std::mt19937_64 rng(21);
  const Matrix x = testing::normal_matrix(3, 4, rng);
  const Matrix pos = x.cwiseAbs().array() + 0.5;
  CHECK(max_fd_error([](Tape&, Var v) { return ad::leaky_relu(v, 0.01); }, x, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::sigmoid(v); }, x, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::exp(v); }, x, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::abs(v); }, x, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::sqrt(v); }, pos, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::neg(ad::scale(ad::add_const(v, 2.0), 3.0)); }, x, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::cmul(v, ad::sub(v, ad::add(v, v))); }, x, rng) < 1e-6);
}

TEST_CASE("linear algebra ops match finite differences") {
  std::mt19937_64 rng(22);
  const Matrix x = testing::normal_matrix(4, 3, rng);
  const Matrix w = testing::normal_matrix(2, 3, rng);
  const Matrix b = testing::normal_matrix(2, 1, rng);
  const Matrix c = testing::normal_matrix(4, 1, rng).cwiseAbs().array() + 0.5;
  CHECK(max_fd_error([&](Tape& t, Var v) { return ad::matmul(v, t.constant(w.transpose())); }, x, rng) < 1e-6);
  CHECK(max_fd_error([&](Tape& t, Var v) { return ad::matmul(t.constant(w), v.cols() == 3 ? ad::matmul_nt(v, v) : v); },
                     testing::normal_matrix(3, 3, rng), rng) < 1e-6);
  CHECK(max_fd_error([&](Tape& t, Var v) { return ad::linear(t.constant(x), v, t.constant(b)); }, w, rng) < 1e-6);
  CHECK(max_fd_error([&](Tape& t, Var v) { return ad::linear(t.constant(x), t.constant(w), v); }, b, rng) < 1e-6);
  CHECK(max_fd_error([&](Tape& t, Var v) { return ad::mul_col(v, t.constant(c)); }, x, rng) < 1e-6);
  CHECK(max_fd_error([&](Tape& t, Var v) { return ad::div_col(t.constant(x), v); }, c, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::row_sum(v); }, x, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::row_sq_norm(v); }, x, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::hcat({ad::cols(v, 1, 2), v, ad::cols(v, 0, 1)}); }, x, rng) < 1e-6);
  auto scalar_ops = [](Tape& t, Var v) {
    Var col_sums = ad::matmul(t.constant(Matrix::Ones(1, 4)), v);  // 1 x 3
    return ad::mul_scalar(v, ad::add_scalar(ad::cols(col_sums, 0, 1), ad::cols(col_sums, 2, 1)));
  };
  CHECK(max_fd_error(scalar_ops, x, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::sum({v, ad::scale(v, 2.0), ad::exp(v)}); }, x, rng) < 1e-6);
}

TEST_CASE("lorentz ops match finite differences") {
  std::mt19937_64 rng(23);
  const Matrix x = testing::normal_matrix(4, 3, rng);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::lift_rows(v, -1.0); }, x, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::lift_rows(v, -0.3); }, x, rng) < 1e-6);
  // Near the series branch of the lift.
  CHECK(max_fd_error([](Tape&, Var v) { return ad::lift_rows(v, -1.0); }, x * 1e-5, rng) < 1e-5);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::lorentz_rows(v, ad::cmul(v, v)); }, x, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::flip_time(v); }, testing::normal_matrix(5, 1, rng), rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::row_normalize(v); }, x, rng) < 1e-6);
  const Matrix pts = manifold_rows(5, 3, rng);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::hyperbolic_similarity(v, -1.0); }, pts, rng) < 1e-5);
}

TEST_CASE("masked softmax keeps masked entries at exactly zero") {
  std::mt19937_64 rng(24);
  Matrix logits(3, 3);
  logits << 1.0, 0.9, 0.1, 0.2, 1.0, 0.95, 0.0, 0.3, 1.0;
  Tape t;
  Var out = ad::masked_row_softmax(t.constant(logits), 0.5);
  CHECK(out.value()(0, 2) == 0.0);
  CHECK(out.value()(2, 0) == 0.0);
  CHECK(out.value()(2, 1) == 0.0);
  CHECK(out.value()(2, 2) == 1.0);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(out.value().row(i).sum() == doctest::Approx(1.0));
  CHECK(max_fd_error([](Tape&, Var v) { return ad::masked_row_softmax(v, 0.5); }, logits, rng) < 1e-6);
}

TEST_CASE("loss ops") {
  std::mt19937_64 rng(25);
  Matrix s(5, 1);
  s << 0.3, 0.9, 0.1, 0.7, 0.5;
  Tape t;
  CHECK(ad::topk_mean(t.constant(s), 2).scalar() == doctest::Approx((0.9 + 0.7 + 0.5) / 3));
  CHECK(max_fd_error([](Tape&, Var v) { return ad::topk_mean(v, 2); }, s, rng) < 1e-6);
  Matrix p(1, 1);
  p << 0.3;
  CHECK(ad::bce(t.constant(p), 1.0).scalar() == doctest::Approx(-std::log(0.3)));
  CHECK(ad::bce(t.constant(p), 0.0).scalar() == doctest::Approx(-std::log(0.7)));
  CHECK(max_fd_error([](Tape&, Var v) { return ad::bce(v, 1.0); }, p, rng) < 1e-6);
  CHECK(max_fd_error([](Tape&, Var v) { return ad::bce(v, 0.0); }, p, rng) < 1e-6);
  Matrix one(1, 1);
  one << 1.0;
  CHECK(ad::bce(t.constant(one), 0.0).scalar() == doctest::Approx(-std::log(1e-12)));
}
