#include <cmath>

#include "doctest.h"
#include "scn/autodiff.hpp"
#include "scn/common.hpp"

using namespace scn;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.gaussian();
  }
  return m;
}

/// Collapse any op output to a scalar with fixed random projections so a
/// single backward covers every output entry.
ad::Var scalarize(const ad::Var& v, Rng& rng) {
  ad::Var left = ad::constant(random_matrix(1, v.rows(), rng));
  ad::Var right = ad::constant(random_matrix(v.cols(), 1, rng));
  return ad::matmul(ad::matmul(left, v), right);
}

/// Finite-difference check of d scalarize(op(x)) / dx.
void check_unary(const std::function<ad::Var(const ad::Var&)>& op, Eigen::Index r,
                 Eigen::Index c, uint64_t seed, double tol = 1e-6) {
  Rng rng(seed);
  Eigen::MatrixXd x = random_matrix(r, c, rng);
  Rng proj_rng(seed ^ 0xfeed);

  ad::Var leaf = ad::leaf(x);
  Rng proj_copy = proj_rng;
  ad::Var loss = scalarize(op(leaf), proj_copy);
  ad::backward(loss);
  Eigen::MatrixXd analytic = leaf.node()->grad;

  const double eps = 1e-6;
  for (Eigen::Index idx = 0; idx < x.size(); ++idx) {
    auto value_at = [&](double delta) {
      Eigen::MatrixXd xx = x;
      xx.data()[idx] += delta;
      Rng pr = proj_rng;
      return scalarize(op(ad::constant(xx)), pr).scalar();
    };
    double fd = (value_at(eps) - value_at(-eps)) / (2 * eps);
    CHECK(analytic.data()[idx] == doctest::Approx(fd).epsilon(tol).scale(1.0));
  }
}

}  // namespace

TEST_CASE("matmul forward and gradients") {
  Rng rng(1);
  Eigen::MatrixXd a = random_matrix(3, 4, rng);
  Eigen::MatrixXd b = random_matrix(4, 2, rng);
  ad::Var la = ad::leaf(a), lb = ad::leaf(b);
  ad::Var out = ad::matmul(la, lb);
  CHECK((out.value() - a * b).norm() == doctest::Approx(0.0));

  Rng pr(2);
  ad::backward(scalarize(out, pr));
  const double eps = 1e-6;
  for (Eigen::Index idx = 0; idx < a.size(); ++idx) {
    auto value_at = [&](double delta) {
      Eigen::MatrixXd aa = a;
      aa.data()[idx] += delta;
      Rng p(2);
      return scalarize(ad::matmul(ad::constant(aa), ad::constant(b)), p).scalar();
    };
    double fd = (value_at(eps) - value_at(-eps)) / (2 * eps);
    CHECK(la.node()->grad.data()[idx] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
  CHECK_THROWS_AS(ad::matmul(la, ad::constant(random_matrix(3, 3, rng))), ConfigError);
}

TEST_CASE("elementwise and shape op gradients match finite differences") {
  check_unary([](const ad::Var& v) { return ad::tanh(v); }, 3, 3, 11);
  check_unary([](const ad::Var& v) { return ad::sigmoid(v); }, 3, 3, 12);
  check_unary([](const ad::Var& v) { return ad::scale(v, -2.5); }, 2, 5, 13);
  check_unary([](const ad::Var& v) { return ad::transpose(v); }, 2, 4, 14);
  check_unary([](const ad::Var& v) { return ad::rows(v, 1, 2); }, 4, 3, 15);
  check_unary([](const ad::Var& v) { return ad::reshape(v, 2, 6); }, 4, 3, 16);
  check_unary([](const ad::Var& v) { return ad::row_softmax(v); }, 3, 4, 17);
  check_unary([](const ad::Var& v) { return ad::softmax(v); }, 5, 1, 18);
  check_unary([](const ad::Var& v) { return ad::logsumexp(v); }, 3, 4, 19);
  check_unary(
      [](const ad::Var& v) {
        return ad::gather(v, {{0, 0}, {2, 1}, {1, 2}, {0, 0}});
      },
      3, 3, 20);
  check_unary(
      [](const ad::Var& v) {
        ad::Var other = ad::constant(Eigen::MatrixXd::Constant(3, 3, 0.7));
        return ad::cmul(v, other);
      },
      3, 3, 21);
  check_unary(
      [](const ad::Var& v) {
        return ad::vconcat(v, ad::constant(Eigen::MatrixXd::Ones(2, 3)));
      },
      3, 3, 22);
}

TEST_CASE("stack_cols and add_scalar route gradients to every parent") {
  Rng rng(31);
  Eigen::MatrixXd a = random_matrix(3, 1, rng);
  Eigen::MatrixXd b = random_matrix(3, 1, rng);
  ad::Var la = ad::leaf(a), lb = ad::leaf(b);
  ad::Var s = ad::leaf(Eigen::MatrixXd::Constant(1, 1, 0.3));
  ad::Var out = ad::add_scalar(ad::stack_cols({la, lb, la}), s);
  Rng pr(32);
  ad::backward(scalarize(out, pr));

  const double eps = 1e-6;
  auto value_at = [&](const Eigen::MatrixXd& aa, const Eigen::MatrixXd& bb, double sv) {
    ad::Var va = ad::constant(aa), vb = ad::constant(bb);
    ad::Var vs = ad::constant(Eigen::MatrixXd::Constant(1, 1, sv));
    Rng p(32);
    return scalarize(ad::add_scalar(ad::stack_cols({va, vb, va}), vs), p).scalar();
  };
  for (Eigen::Index idx = 0; idx < a.size(); ++idx) {
    Eigen::MatrixXd up = a, dn = a;
    up.data()[idx] += eps;
    dn.data()[idx] -= eps;
    double fd = (value_at(up, b, 0.3) - value_at(dn, b, 0.3)) / (2 * eps);
    CHECK(la.node()->grad.data()[idx] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
  double fd_s = (value_at(a, b, 0.3 + eps) - value_at(a, b, 0.3 - eps)) / (2 * eps);
  CHECK(s.node()->grad(0, 0) == doctest::Approx(fd_s).epsilon(1e-6).scale(1.0));
}

TEST_CASE("softmax and logsumexp stay finite under extreme logits") {
  Eigen::MatrixXd big(3, 1);
  big << 1e4, 9.999e3, -1e4;
  ad::Var v = ad::leaf(big);
  ad::Var sm = ad::softmax(v);
  CHECK(std::isfinite(sm.value().sum()));
  CHECK(sm.value().sum() == doctest::Approx(1.0));
  ad::Var lse = ad::logsumexp(v);
  CHECK(std::isfinite(lse.scalar()));
  CHECK(lse.scalar() == doctest::Approx(1e4 + std::log(1.0 + std::exp(-1.0))));
}

TEST_CASE("bce_with_logit matches the naive formula and stays stable") {
  // naive formula is well conditioned only for moderate logits
  for (double x : {-6.0, -2.0, 0.0, 0.7, 5.0}) {
    for (double y : {0.0, 1.0}) {
      ad::Var logit = ad::leaf(Eigen::MatrixXd::Constant(1, 1, x));
      ad::Var loss = ad::bce_with_logit(logit, y);
      double p = 1.0 / (1.0 + std::exp(-x));
      double naive = -(y * std::log(p) + (1 - y) * std::log(1 - p));
      CHECK(loss.scalar() == doctest::Approx(naive).epsilon(1e-9).scale(1.0));
      ad::backward(loss);
      CHECK(logit.node()->grad(0, 0) == doctest::Approx(p - y).epsilon(1e-9));
    }
  }
  // extreme logits: the loss collapses to its linear asymptote instead of
  // overflowing or cancelling
  for (double x : {-500.0, 500.0}) {
    for (double y : {0.0, 1.0}) {
      ad::Var logit = ad::leaf(Eigen::MatrixXd::Constant(1, 1, x));
      ad::Var loss = ad::bce_with_logit(logit, y);
      CHECK(std::isfinite(loss.scalar()));
      CHECK(loss.scalar() == doctest::Approx(std::max(x, 0.0) - x * y).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradients accumulate through shared subexpressions") {
  ad::Var x = ad::leaf(Eigen::MatrixXd::Constant(1, 1, 1.5));
  ad::Var y = ad::cmul(x, x);        // x^2
  ad::Var z = ad::add(y, x);         // x^2 + x
  ad::backward(z);
  CHECK(x.node()->grad(0, 0) == doctest::Approx(2 * 1.5 + 1));  // 2x + 1
}

TEST_CASE("backward on an all-constant graph is a no-op") {
  ad::Var c = ad::constant(Eigen::MatrixXd::Ones(2, 2));
  ad::Var out = ad::logsumexp(ad::tanh(c));
  CHECK_NOTHROW(ad::backward(out));
  CHECK_FALSE(out.requires_grad());
}
