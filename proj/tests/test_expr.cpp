#include <doctest.h>

#include <random>

#include "fd_oracle.hpp"
#include "sqm/expr.hpp"

using namespace sqm;

TEST_CASE("parse evaluates arithmetic") {
  CHECK(evaluate(parse("x^3 - x", {"x"}), {2.0}) == cplx(6.0));
  CHECK(evaluate(parse("exp(x*y)", {"x", "y"}), {1.0, 0.0}) == cplx(1.0));
  CHECK(evaluate(parse("2^3^2", {}), {}) == cplx(512.0));
  CHECK(evaluate(parse("-x^2", {"x"}), {3.0}) == cplx(-9.0));
  CHECK(evaluate(parse("1 - 2 - 3", {}), {}) == cplx(-4.0));
  CHECK(evaluate(parse("8/4/2", {}), {}) == cplx(1.0));
  CHECK(evaluate(parse("i*i", {}), {}) == cplx(-1.0));
  CHECK(std::abs(evaluate(parse("x^(1/3)", {"x"}), {8.0}) - 2.0) < 1e-15);
  CHECK(std::abs(evaluate(parse("x^-0.5", {"x"}), {4.0}) - 0.5) < 1e-15);
}

TEST_CASE("derivative of 1/(x^2+1) at x = 1") {
  ExprEvaluator ev({1.0});
  const Series& s = ev.eval(parse("1/(x^2+1)", {"x"}), 2);
  CHECK(std::abs(s.partial(MultiIndex::unit(0)) + 0.5) < 1e-15);
  // finite-difference oracle
  auto f = [](double x) { return 1.0 / (x * x + 1); };
  double h = 1e-5, fd = (f(1 + h) - f(1 - h)) / (2 * h);
  CHECK(std::abs(s.partial(MultiIndex::unit(0)).real() - fd) < 1e-9);
}

TEST_CASE("mixed partial of x*y is one everywhere") {
  ExprEvaluator ev({-0.3, 2.2});
  const Series& s = ev.eval(parse("x*y", {"x", "y"}), 4);
  CHECK(s.partial(MultiIndex::unit(0) + MultiIndex::unit(1)) == cplx(1.0));
  CHECK(s.partial(MultiIndex::unit(0) + MultiIndex::unit(0)) == cplx(0.0));
}

TEST_CASE("constants have vanishing partials") {
  ExprEvaluator ev({0.1, 0.2});
  const Series& s = ev.eval(parse("3 + 2*i", {"x", "y"}), 4);
  for (std::size_t j = 1; j < s.size(); ++j) CHECK(s[static_cast<int>(j)] == cplx(0.0));
}

TEST_CASE("parse errors carry positions") {
  try {
    parse("x + * y", {"x", "y"});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
  try {
    parse("x + z", {"x", "y"});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
  CHECK_THROWS_AS(parse("(x + y", {"x", "y"}), ParseError);
  CHECK_THROWS_AS(parse("x^y", {"x", "y"}), ParseError);
  CHECK_THROWS_AS(parse("x^0.1234567891234", {"x"}), ParseError);
}

TEST_CASE("symbols expand named sub-expressions") {
  SymbolTable sym{{"W", parse("x^3 - x", {"x"})}};
  CHECK(evaluate(parse("2*W + 1", {"x"}, sym), {2.0}) == cplx(13.0));
}

namespace {

const char* kSamples[] = {
    "x^3 - x",
    "exp(x*y) - 1/(x^2 + 1)",
    "sqrt(1 + x^2 + y^2)*log(2 + y)",
    "-x^2 - (-y)^3 + sin(x - y)*cos(2*x)",
    "(1 + 2*i)*x - i*y^(2/3) + x/(y*(1 + x))",
    "-(x - y) - -x + 2^-1*x^(-2)",
    "exp(-x^2/2)*(x*y)^3 - 3.25e-3*y/x",
};

}  // namespace

TEST_CASE("print then parse reproduces jets exactly") {
  std::vector<std::string> coords{"x", "y"};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  for (const char* text : kSamples) {
    Expr e = parse(text, coords);
    std::string printed = print(e, coords);
    Expr back = parse(printed, coords);
    CHECK_MESSAGE(print(back, coords) == printed, text);
    for (int t = 0; t < 5; ++t) {
      std::vector<double> p{u(rng), u(rng)};
      ExprEvaluator a(p), b(p);
      const Series& sa = a.eval(e, 3);
      const Series& sb = b.eval(back, 3);
      for (std::size_t j = 0; j < sa.size(); ++j) CHECK_MESSAGE(sa[static_cast<int>(j)] == sb[static_cast<int>(j)], printed);
    }
  }
}

TEST_CASE("expression jets match finite differences at random points") {
  std::vector<std::string> coords{"x", "y"};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  for (const char* text : kSamples) {
    Expr e = parse(text, coords);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> p{u(rng), u(rng)};
      auto f = [&](const std::vector<double>& q, int k) {
        ExprEvaluator ev(q);
        return MatJet::from_scalar(ev.eval(e, k));
      };
      CHECK_MESSAGE(testing::compare_fd(f, p).worst_rel < 1e-6, text);
    }
  }
}
