#include "hypervd/autodiff.hpp"

#include <cmath>
#include <utility>

#include <fmt/core.h>

#include "hypervd/error.hpp"
#include "hypervd/numeric.hpp"

namespace hypervd::ad {

const Matrix& Var::value() const { return tape_->value(index_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw DimensionError(fmt::format("ad: expected 1x1, got {}x{}", v.rows(), v.cols()));
  return v(0, 0);
}

Var Tape::leaf(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || nodes_[p.index()].requires_grad;
  nodes_.push_back(Node{std::move(value), Matrix(), needs ? std::move(backward) : nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, const std::vector<Var>& parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || nodes_[p.index()].requires_grad;
  nodes_.push_back(Node{std::move(value), Matrix(), needs ? std::move(backward) : nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(Var v, const Matrix& delta) {
  Node& n = nodes_[v.index()];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = delta;
  } else {
    n.grad += delta;
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.index()];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.value().size() != 1) throw DimensionError("ad: backward root must be 1x1");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  accumulate(root, Matrix::Ones(1, 1));
  for (std::size_t i = root.index() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
  }
}

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(fmt::format("ad::{}: shape mismatch {}x{} vs {}x{}", op, a.rows(), a.cols(),
                                     b.rows(), b.cols()));
  }
}

void require_col(const Var& a, const Var& c, const char* op) {
  if (c.cols() != 1 || c.rows() != a.rows()) {
    throw DimensionError(fmt::format("ad::{}: expected {}x1 column, got {}x{}", op, a.rows(), c.rows(),
                                     c.cols()));
  }
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  return a.tape()->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var cmul(Var a, Var b) {
  require_same_shape(a, b, "cmul");
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(b.value()));
    t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double s) {
  return a.tape()->record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var add_const(Var a, double s) {
  return a.tape()->record(a.value().array() + s, {a}, [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var mul_scalar(Var a, Var s) {
  const double sv = s.scalar();
  return a.tape()->record(a.value() * sv, {a, s}, [a, s, sv](Tape& t, const Matrix& g) {
    t.accumulate(a, g * sv);
    t.accumulate(s, Matrix::Constant(1, 1, g.cwiseProduct(a.value()).sum()));
  });
}

Var add_scalar(Var a, Var s) {
  const double sv = s.scalar();
  return a.tape()->record(a.value().array() + sv, {a, s}, [a, s](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(s, Matrix::Constant(1, 1, g.sum()));
  });
}

Var sum(const std::vector<Var>& terms) {
  if (terms.empty()) throw DimensionError("ad::sum: no terms");
  Matrix out = terms.front().value();
  for (std::size_t i = 1; i < terms.size(); ++i) {
    require_same_shape(terms.front(), terms[i], "sum");
    out += terms[i].value();
  }
  return terms.front().tape()->record(std::move(out), terms, [terms](Tape& t, const Matrix& g) {
    for (const Var& v : terms) t.accumulate(v, g);
  });
}

Var leaky_relu(Var a, double slope) {
  Matrix out = a.value().unaryExpr([slope](double x) { return hypervd::leaky_relu(x, slope); });
  return a.tape()->record(std::move(out), {a}, [a, slope](Tape& t, const Matrix& g) {
    Matrix d = a.value().unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var sigmoid(Var a) {
  Matrix out = a.value().unaryExpr([](double x) { return hypervd::sigmoid(x); });
  Var r = a.tape()->record(out, {a}, [a, out](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix())));
  });
  return r;
}

Var sqrt(Var a) {
  Matrix out = a.value().cwiseSqrt();
  return a.tape()->record(out, {a}, [a, out](Tape& t, const Matrix& g) {
    Matrix d = out.unaryExpr([](double r) { return r > 0.0 ? 0.5 / r : 0.0; });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var exp(Var a) {
  Matrix out = a.value().array().exp();
  return a.tape()->record(out, {a}, [a, out](Tape& t, const Matrix& g) { t.accumulate(a, g.cwiseProduct(out)); });
}

Var abs(Var a) {
  return a.tape()->record(a.value().cwiseAbs(), {a}, [a](Tape& t, const Matrix& g) {
    Matrix s = a.value().unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    t.accumulate(a, g.cwiseProduct(s));
  });
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throw DimensionError(fmt::format("ad::matmul: {}x{} * {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
  }
  return a.tape()->record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) {
    throw DimensionError(fmt::format("ad::matmul_nt: {}x{} * ({}x{})^T", a.rows(), a.cols(), b.rows(), b.cols()));
  }
  return a.tape()->record(a.value() * b.value().transpose(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value());
    if (t.requires_grad(b)) t.accumulate(b, g.transpose() * a.value());
  });
}

Var linear(Var x, Var w, Var b) {
  if (x.cols() != w.cols() || b.rows() != w.rows() || b.cols() != 1) {
    throw DimensionError(fmt::format("ad::linear: input {}x{}, weight {}x{}, bias {}x{}", x.rows(), x.cols(),
                                     w.rows(), w.cols(), b.rows(), b.cols()));
  }
  Matrix out = x.value() * w.value().transpose();
  out.rowwise() += b.value().col(0).transpose();
  return x.tape()->record(std::move(out), {x, w, b}, [x, w, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) t.accumulate(x, g * w.value());
    if (t.requires_grad(w)) t.accumulate(w, g.transpose() * x.value());
    if (t.requires_grad(b)) t.accumulate(b, g.colwise().sum().transpose());
  });
}

Var linear(Var x, Var w) {
  if (x.cols() != w.cols()) {
    throw DimensionError(fmt::format("ad::linear: input {}x{}, weight {}x{}", x.rows(), x.cols(), w.rows(), w.cols()));
  }
  return x.tape()->record(x.value() * w.value().transpose(), {x, w}, [x, w](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) t.accumulate(x, g * w.value());
    if (t.requires_grad(w)) t.accumulate(w, g.transpose() * x.value());
  });
}

Var mul_col(Var a, Var c) {
  require_col(a, c, "mul_col");
  Matrix out = a.value().array().colwise() * c.value().col(0).array();
  return a.tape()->record(std::move(out), {a, c}, [a, c](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array().colwise() * c.value().col(0).array()).matrix());
    t.accumulate(c, g.cwiseProduct(a.value()).rowwise().sum());
  });
}

Var div_col(Var a, Var c) {
  require_col(a, c, "div_col");
  Matrix out = a.value().array().colwise() / c.value().col(0).array();
  return a.tape()->record(out, {a, c}, [a, c, out](Tape& t, const Matrix& g) {
    const auto cv = c.value().col(0).array();
    t.accumulate(a, (g.array().colwise() / cv).matrix());
    t.accumulate(c, (-(g.cwiseProduct(out).rowwise().sum().array()) / cv).matrix());
  });
}

Var row_sum(Var a) {
  return a.tape()->record(a.value().rowwise().sum(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.col(0).replicate(1, a.cols()));
  });
}

Var row_sq_norm(Var a) {
  return a.tape()->record(a.value().rowwise().squaredNorm(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, 2.0 * (a.value().array().colwise() * g.col(0).array()).matrix());
  });
}

Var cols(Var a, Eigen::Index start, Eigen::Index n) {
  if (start < 0 || n < 0 || start + n > a.cols()) {
    throw DimensionError(fmt::format("ad::cols: [{}, {}) out of {} columns", start, start + n, a.cols()));
  }
  return a.tape()->record(a.value().middleCols(start, n), {a}, [a, start, n](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleCols(start, n) = g;
    t.accumulate(a, full);
  });
}

Var hcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("ad::hcat: no parts");
  Eigen::Index total = 0;
  for (const Var& p : parts) {
    if (p.rows() != parts.front().rows()) throw DimensionError("ad::hcat: row count mismatch");
    total += p.cols();
  }
  Matrix out(parts.front().rows(), total);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return parts.front().tape()->record(std::move(out), parts, [parts](Tape& t, const Matrix& g) {
    Eigen::Index o = 0;
    for (const Var& p : parts) {
      if (t.requires_grad(p)) t.accumulate(p, g.middleCols(o, p.cols()));
      o += p.cols();
    }
  });
}

Var lorentz_rows(Var a, Var b) {
  require_same_shape(a, b, "lorentz_rows");
  if (a.cols() < 2) throw DimensionError("ad::lorentz_rows: need at least 2 columns");
  Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
  out.col(0) -= 2.0 * a.value().col(0).cwiseProduct(b.value().col(0));
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    Matrix jb = b.value();
    jb.col(0) *= -1.0;
    Matrix ja = a.value();
    ja.col(0) *= -1.0;
    t.accumulate(a, (jb.array().colwise() * g.col(0).array()).matrix());
    t.accumulate(b, (ja.array().colwise() * g.col(0).array()).matrix());
  });
}

Var flip_time(Var w) {
  if (w.cols() != 1 || w.rows() < 1) throw DimensionError("ad::flip_time: expected a column vector");
  Matrix out = w.value();
  out(0, 0) = -out(0, 0);
  return w.tape()->record(std::move(out), {w}, [w](Tape& t, const Matrix& g) {
    Matrix d = g;
    d(0, 0) = -d(0, 0);
    t.accumulate(w, d);
  });
}

namespace {

// sinh(u)/u and c^2 (u cosh u - sinh u)/u^3 with series near u = 0.
struct LiftCoeffs {
  double f;
  double fprime_over_n;
};

LiftCoeffs lift_coeffs(double u, double c) {
  if (u < 1e-4) {
    const double u2 = u * u;
    return {1.0 + u2 / 6.0, c * c * (1.0 / 3.0 + u2 / 30.0)};
  }
  return {std::sinh(u) / u, c * c * (u * std::cosh(u) - std::sinh(u)) / (u * u * u)};
}

}  // namespace

Var lift_rows(Var v, double curvature) {
  const double c = std::sqrt(-curvature);
  const Eigen::Index n = v.cols();
  Matrix out(v.rows(), n + 1);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double u = c * v.value().row(i).norm();
    out(i, 0) = std::cosh(u) / c;
    out.row(i).tail(n) = lift_coeffs(u, c).f * v.value().row(i);
  }
  return v.tape()->record(std::move(out), {v}, [v, c, n](Tape& t, const Matrix& g) {
    Matrix gv(v.rows(), n);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const auto row = v.value().row(i);
      const double u = c * row.norm();
      const LiftCoeffs k = lift_coeffs(u, c);
      const auto gs = g.row(i).tail(n);
      // d(cosh(u)/c)/dv = c f v ; d(f v)/dv = f I + (f'/|v|) v v^T
      gv.row(i) = (g(i, 0) * c * k.f + k.fprime_over_n * row.dot(gs)) * row + k.f * gs;
    }
    t.accumulate(v, gv);
  });
}

Var hyperbolic_similarity(Var x, double curvature) {
  const Eigen::Index m = x.rows();
  Matrix jx = x.value();
  jx.col(0) *= -1.0;
  const Matrix p = curvature * (x.value() * jx.transpose());
  Matrix out(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      out(i, j) = i == j ? 1.0 : std::exp(-std::acosh(std::max(p(i, j), 1.0)));
    }
  }
  return x.tape()->record(out, {x}, [x, curvature, p, out, jx](Tape& t, const Matrix& g) {
    const Eigen::Index m = p.rows();
    Matrix dp = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (i == j || p(i, j) <= 1.0 + 1e-12) continue;
        dp(i, j) = -g(i, j) * out(i, j) / std::sqrt(p(i, j) * p(i, j) - 1.0);
      }
    }
    // P = K x J x^T
    t.accumulate(x, curvature * ((dp + dp.transpose()) * jx));
  });
}

Var row_normalize(Var a, double eps) {
  Vector norms = a.value().rowwise().norm();
  Matrix out = a.value();
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= std::max(norms[i], eps);
  return a.tape()->record(out, {a}, [a, norms, out, eps](Tape& t, const Matrix& g) {
    Matrix ga(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < ga.rows(); ++i) {
      if (norms[i] > eps) {
        ga.row(i) = (g.row(i) - out.row(i) * out.row(i).dot(g.row(i))) / norms[i];
      } else {
        ga.row(i) = g.row(i) / eps;
      }
    }
    t.accumulate(a, ga);
  });
}

Var masked_row_softmax(Var logits, double tau) {
  Matrix p = hypervd::masked_row_softmax(logits.value(), tau);
  return logits.tape()->record(p, {logits}, [logits, p](Tape& t, const Matrix& g) {
    Vector inner = g.cwiseProduct(p).rowwise().sum();
    Matrix d = p.cwiseProduct((g.colwise() - inner));
    t.accumulate(logits, d);
  });
}

Var topk_mean(Var scores, int q) {
  if (scores.cols() != 1) throw DimensionError("ad::topk_mean: expected a score column");
  const Eigen::Index k = kmax_count(scores.rows(), q);
  const std::vector<Eigen::Index> idx = kmax_indices(scores.value().col(0), k);
  double acc = 0.0;
  for (Eigen::Index i : idx) acc += scores.value()(i, 0);
  return scores.tape()->record(Matrix::Constant(1, 1, acc / static_cast<double>(k)), {scores},
                               [scores, idx, k](Tape& t, const Matrix& g) {
                                 Matrix d = Matrix::Zero(scores.rows(), 1);
                                 for (Eigen::Index i : idx) d(i, 0) = g(0, 0) / static_cast<double>(k);
                                 t.accumulate(scores, d);
                               });
}

Var bce(Var s, double y) {
  constexpr double kClamp = 1e-12;
  const double sv = s.scalar();
  const double loss = -y * std::log(std::max(sv, kClamp)) - (1.0 - y) * std::log(std::max(1.0 - sv, kClamp));
  return s.tape()->record(Matrix::Constant(1, 1, loss), {s}, [s, sv, y](Tape& t, const Matrix& g) {
    double d = 0.0;
    if (sv > kClamp) d -= y / sv;
    if (1.0 - sv > kClamp) d += (1.0 - y) / (1.0 - sv);
    t.accumulate(s, Matrix::Constant(1, 1, g(0, 0) * d));
  });
}

}  // namespace hypervd::ad
