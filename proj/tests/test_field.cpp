#include <doctest.h>

#include <random>

#include "fd_oracle.hpp"
#include "sqm/field.hpp"

using namespace sqm;

namespace {

const std::vector<std::string> kXY{"x", "y"};

Field g(int r, int c, std::vector<std::string> entries) {
  std::vector<Expr> e;
  for (const auto& s : entries) e.push_back(parse(s, kXY));
  return Field::grid(r, c, e);
}

double fd_worst(const Field& f, int samples = 20, std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 1.2);
  double worst = 0;
  for (int t = 0; t < samples; ++t) {
    std::vector<double> p{u(rng), u(rng)};
    auto fn = [&](const std::vector<double>& q, int k) {
      FieldEvaluator ev(q);
      return ev.eval(f, k);
    };
    worst = std::max(worst, testing::compare_fd(fn, p).worst_rel);
  }
  return worst;
}

}  // namespace

TEST_CASE("constant fields have zero partials at any order") {
  Field c = Field::constant(Mat::Constant(2, 2, cplx(1.5, -2)));
  auto j = jet(c, {0.3, 0.4}, 4);
  for (const auto& e : j)
    for (const auto& [a, v] : e.partials)
      if (a.order() > 0) CHECK(v == cplx(0.0));
}

TEST_CASE("field x*y has unit mixed partial") {
  auto j = jet(g(1, 1, {"x*y"}), {0.7, -1.1}, 2);
  CHECK(j[0].partials.at(MultiIndex::unit(0) + MultiIndex::unit(1)) == cplx(1.0));
}

TEST_CASE("jet order above the public cap is rejected") {
  CHECK_THROWS_AS(jet(g(1, 1, {"x"}), {0.1, 0.2}, kDerivativeCap + 1), OrderOverflow);
}

TEST_CASE("every field node kind matches finite differences") {
  Field A = g(2, 2, {"x", "1 + y^2", "x*y", "-x"});
  Field B = g(2, 2, {"sin(x)", "y", "exp(x - y)", "1/(1 + x^2)"});
  Field s = g(1, 1, {"x^2 + y"});
  Mat P(2, 2), Q(2, 2);
  P << 0, 1, 0, 0;
  Q << 0, 0, 1, 0;
  std::vector<std::pair<const char*, Field>> cases = {
      {"grid", A},
      {"sum", A - 2.0 * B},
      {"product", A * B},
      {"scalar product", s * B},
      {"contract", contract(A, {P, Q, Q * P, P * Q})},
      {"exp", mat_exp(A)},
      {"inverse", inverse(A * B + Field::identity(2))},
      {"det", det(B)},
      {"trace", trace(A * B)},
      {"log", scalar_fn(ExprOp::Log, s)},
      {"pow", scalar_fn(ExprOp::Pow, s, -1, 2)},
      {"deriv", deriv(A * B, 0)},
      {"second deriv", deriv(mat_exp(B), MultiIndex::unit(0) + MultiIndex::unit(1))},
      {"adjoint", adjoint(A * Field::constant(Mat::Constant(2, 2, cplx(0, 1))))},
      {"transpose", transpose(A * B)},
      {"entry", entry(A * B, 1, 0)},
      {"assemble", assemble(1, 2, {entry(A * B, 0, 1), s})},
  };
  for (const auto& [name, f] : cases) CHECK_MESSAGE(fd_worst(f) < 1e-6, name);
}

TEST_CASE("restriction embeds a reduced coordinate space") {
  // f(u, v, w) restricted to (x, y) -> (u = y, v = 0.3, w = x)
  std::vector<std::string> uvw{"u", "v", "w"};
  Field f = Field::grid(1, 1, {parse("u*exp(w) + v*u^2", uvw)});
  auto r = std::make_shared<Restriction>(Restriction{{1, -1, 0}, {0, 0.3, 0}});
  Field fr = restrict_field(f, r);
  CHECK(fr.mask() == 3u);
  Field direct = g(1, 1, {"y*exp(x) + 0.3*y^2"});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> p{u(rng), u(rng)};
    FieldEvaluator ev(p);
    const MatJet& a = ev.eval(deriv(fr, 1), 2);
    const MatJet& b = ev.eval(deriv(direct, 1), 2);
    for (int i = 0; i < a.size(); ++i) CHECK(std::abs(a.coef(i)(0, 0) - b.coef(i)(0, 0)) < 1e-13);
  }
  CHECK(fd_worst(fr) < 1e-6);
}

TEST_CASE("derivatives in directions a field ignores fold to zero") {
  Field a = g(1, 1, {"x^2"});
  CHECK(deriv(a, 1).is_zero());
  CHECK_FALSE(deriv(a, 0).is_zero());
  CHECK(deriv(Field::identity(3), 0).is_zero());
}

TEST_CASE("mat_exp of commuting fields factorizes") {
  Mat P(3, 3);
  P << 0.1, 1, 0, -0.4, 0.2, 0.5, 0.3, 0, -0.7;
  Field C = Field::constant(P);
  Field A = g(1, 1, {"sin(x*y)"}) * C;
  Field B = g(1, 1, {"exp(x) - y"}) * (C * C);
  Field lhs = mat_exp(A + B), rhs = mat_exp(A) * mat_exp(B);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> p{u(rng), u(rng)};
    FieldEvaluator ev(p);
    const MatJet& a = ev.eval(lhs, 2);
    const MatJet& b = ev.eval(rhs, 2);
    for (int i = 0; i < a.size(); ++i) CHECK((a.coef(i) - b.coef(i)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("mat_exp(w) mat_exp(-w) is the identity with jets") {
  Field w = g(3, 3, {"x", "y", "x*y", "0.5", "-x", "y^2", "sin(x)", "0", "cos(y)"});
  Field prod = mat_exp(w) * mat_exp(-w);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> p{u(rng), u(rng)};
    FieldEvaluator ev(p);
    const MatJet& a = ev.eval(prod, 3);
    CHECK((a.coef(0) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 1; i < a.size(); ++i) CHECK(a.coef(i).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("shape errors are reported") {
  CHECK_THROWS_AS(Field::zero(2, 3) * Field::zero(2, 3), ShapeError);
  CHECK_THROWS_AS(mat_exp(Field::zero(2, 3)), ShapeError);
  CHECK_THROWS_AS(Field::zero(2, 2) + Field::zero(3, 3), ShapeError);
}

TEST_CASE("singular points surface from inverse") {
  Field a = g(1, 1, {"x - y"});
  CHECK_THROWS_AS(value(scalar_fn(ExprOp::Pow, a, -1), {0.5, 0.5}), SingularPoint);
}
