#include <doctest.h>

#include <fstream>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "op_helpers.hpp"
#include "sqm/clifford.hpp"

using namespace sqm;
using namespace sqm::testing;

namespace {

const std::vector<std::string> kX{"x"};
const std::vector<std::string> kXY{"x", "y"};
const cplx I(0, 1);

DiffOp mult(const std::vector<std::string>& c, const Field& f) { return DiffOp::multiplication(c, f); }

DiffOp ode(const std::vector<std::string>& coefs) {
  DiffOp op(kX, 1);
  MultiIndex a;
  for (const auto& c : coefs) {
    op.add_term(a, sfield(c, kX));
    a = a + MultiIndex::unit(0);
  }
  return op;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

TEST_CASE("Leibniz: d o f = f d + f'") {
  DiffOp d = DiffOp::partial(kX, 1, 0);
  Field f = sfield("sin(x)*x", kX);
  DiffOp lhs = compose(d, mult(kX, f));
  DiffOp rhs = compose(mult(kX, f), d) + mult(kX, sfield("cos(x)*x + sin(x)", kX));
  CHECK(zero(lhs - rhs, box(1)));
  CHECK(lhs.order() == 1);
}

TEST_CASE("p o p is minus the second derivative") {
  DiffOp p = DiffOp::momentum(kX, 1, 0);
  DiffOp pp = compose(p, p);
  DiffOp d2(kX, 1);
  d2.add_term(MultiIndex::unit(0) + MultiIndex::unit(0), Field::identity(1), -1.0);
  CHECK(res(pp - d2, box(1)) == 0.0);
}

TEST_CASE("multiplication operators by fermions obey the CAR") {
  FermionRep r = complex_fermions(2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      DiffOp A = mult(kX, Field::constant(r.psi[a])), B = mult(kX, Field::constant(r.psibar[b]));
      DiffOp want = mult(kX, a == b ? Field::identity(4) : Field::zero(4, 4));
      CHECK(res(anticommutator(A, B) - want, box(1)) == 0.0);
    }
}

TEST_CASE("Witten supercharge squares to zero and closes on the textbook Hamiltonian") {
  FermionRep r = complex_fermions(1);
  Field psi = Field::constant(r.psi[0]), psib = Field::constant(r.psibar[0]);
  // Q = psi (p + i W'), W = x^3 - x
  DiffOp Q = compose(mult(kX, psi), DiffOp::momentum(kX, 2, 0) + mult(kX, I * sfield("3*x^2 - 1", kX) * Field::identity(2)));
  DiffOp Qb = naive_dagger(Q);
  CHECK(zero(compose(Q, Q), box(1)));
  CHECK(zero(compose(Qb, Qb), box(1)));
  DiffOp H = 0.5 * anticommutator(Q, Qb);
  DiffOp p = DiffOp::momentum(kX, 2, 0);
  DiffOp want = 0.5 * (compose(p, p) + mult(kX, sfield("(3*x^2-1)^2", kX) * Field::identity(2)) +
                       mult(kX, sfield("6*x", kX) * Field::constant(r.psibar[0] * r.psi[0] - r.psi[0] * r.psibar[0])));
  CHECK(zero(H - want, box(1)));
  CHECK(zero(Qb - compose(mult(kX, psib), DiffOp::momentum(kX, 2, 0) - mult(kX, I * sfield("3*x^2 - 1", kX) * Field::identity(2))), box(1)));
}

TEST_CASE("naive dagger examples") {
  DiffOp p = DiffOp::momentum(kX, 1, 0);
  CHECK(res(naive_dagger(p) - p, box(1)) == 0.0);
  // (f d)^dagger = -conj(f) d - conj(f)'
  Field f = sfield("x^2 + i*x", kX);
  DiffOp fd(kX, 1);
  fd.add_term(MultiIndex::unit(0), f);
  DiffOp want(kX, 1);
  want.add_term(MultiIndex::unit(0), sfield("x^2 - i*x", kX), -1.0);
  want.add_term(MultiIndex{}, sfield("2*x - i", kX), -1.0);
  CHECK(zero(naive_dagger(fd) - want, box(1)));
  CHECK(zero(adjoint_with_measure(fd, Field::scalar(1.0)) - naive_dagger(fd), box(1)));
}

TEST_CASE("measure adjoint conjugates the flat adjoint by the measure") {
  std::mt19937_64 rng(5);
  DiffOp A = random_op(rng, kXY, 2, 2);
  Field mu = sfield("2 + sin(x)*y", kXY);
  DiffOp want = compose(mult(kXY, scalar_fn(ExprOp::Pow, mu, -1) * Field::identity(2)),
                        compose(naive_dagger(A), mult(kXY, mu * Field::identity(2))));
  CHECK(zero(adjoint_with_measure(A, mu) - want, box(2)));
}

TEST_CASE("similarity examples") {
  FermionRep r1 = complex_fermions(1);
  Field psi = Field::constant(r1.psi[0]);
  DiffOp free = compose(mult(kX, psi), DiffOp::momentum(kX, 2, 0));
  CHECK(res(similarity(free, Field::zero(2, 2)) - free, box(1)) == 0.0);
  // e^W psi p e^-W = psi (p + i W')
  Field W = sfield("x^3 - x", kX);
  DiffOp want = compose(mult(kX, psi), DiffOp::momentum(kX, 2, 0) + mult(kX, I * sfield("3*x^2-1", kX) * Field::identity(2)));
  CHECK(zero(similarity(free, W) - want, box(1)));
  CHECK(zero(similarity(free, W * Field::identity(2)) - want, box(1)));

  // constant omega: sqrt2 psi_a pi_a -> sqrt2 psi_d (e^omega)_dc pi_c
  const std::vector<std::string> c4{"x1", "y1", "x2", "y2"};
  FermionRep r = complex_fermions(2);
  Mat om(2, 2);
  om << 0.3, cplx(0.2, -0.5), 0.7, -0.4;
  Mat eom = om.exp();
  auto pi = [&](int a) { return DiffOp::momentum(c4, 4, 2 * a) + I * DiffOp::momentum(c4, 4, 2 * a + 1); };
  DiffOp Qf(c4, 4), Qw(c4, 4);
  for (int a = 0; a < 2; ++a) Qf = Qf + compose(mult(c4, Field::constant(r.psi[a])), pi(a));
  for (int d = 0; d < 2; ++d)
    for (int c = 0; c < 2; ++c) Qw = Qw + compose(mult(c4, Field::constant(eom(d, c) * r.psi[d])), pi(c));
  Field R = bilinear(r, Field::constant(om), Ordering::PsiPsibar);
  CHECK(res(similarity(Qf, R) - Qw, box(4)) < 1e-13);
}

TEST_CASE("similarity via derivative rewriting equals direct conjugation") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 3; ++t) {
    DiffOp A = random_op(rng, kXY, 2, 2);
    Field R = Field::grid(2, 2, {parse("x*y", kXY), parse("sin(y)", kXY), parse("0.5", kXY), parse("x - y^2", kXY)});
    CHECK(zero(similarity(A, R) - similarity_by_composition(A, R), box(2, -0.8, 0.8)));
    Field s = sfield("x^2 * y", kXY);
    CHECK(zero(similarity(A, s) - similarity_by_composition(A, s), box(2)));
  }
}

TEST_CASE("composition is associative") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 4; ++t) {
    DiffOp A = random_op(rng, kXY, 2, 1), B = random_op(rng, kXY, 2, 2), C = random_op(rng, kXY, 2, 1);
    CHECK(zero(compose(compose(A, B), C) - compose(A, compose(B, C)), box(2), 1e-10));
  }
}

TEST_CASE("dagger is an anti-involution") {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 4; ++t) {
    DiffOp A = random_op(rng, kXY, 2, 2), B = random_op(rng, kXY, 2, 2);
    CHECK(zero(naive_dagger(naive_dagger(A)) - A, box(2)));
    CHECK(zero(naive_dagger(compose(A, B)) - compose(naive_dagger(B), naive_dagger(A)), box(2)));
  }
}

TEST_CASE("similarity is a homomorphism and keeps nilpotency") {
  std::mt19937_64 rng(31);
  Field R = Field::grid(2, 2, {parse("x", kXY), parse("y^2", kXY), parse("0", kXY), parse("x*y", kXY)});
  for (int t = 0; t < 3; ++t) {
    DiffOp A = random_op(rng, kXY, 2, 1), B = random_op(rng, kXY, 2, 2);
    CHECK(zero(similarity(compose(A, B), R) - compose(similarity(A, R), similarity(B, R)), box(2, -0.7, 0.7)));
  }
  FermionRep r = complex_fermions(2);
  const std::vector<std::string> c4{"x1", "y1", "x2", "y2"};
  DiffOp Q(c4, 4);
  for (int a = 0; a < 2; ++a)
    Q = Q + compose(mult(c4, Field::constant(r.psi[a])),
                    DiffOp::momentum(c4, 4, 2 * a) + I * DiffOp::momentum(c4, 4, 2 * a + 1));
  Field om = Field::grid(2, 2, {parse("x1*y2", c4), parse("sin(x2)", c4), parse("y1^2", c4), parse("0.3*x1", c4)});
  DiffOp Qr = similarity(Q, bilinear(r, om, Ordering::PsiPsibar));
  CHECK(zero(compose(Qr, Qr), box(4, -0.6, 0.6)));
}

TEST_CASE("golden one-coordinate compositions") {
  std::ifstream in(std::string(SQM_TEST_DATA) + "/compose_golden.txt");
  REQUIRE(in.good());
  std::string line;
  int cases = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto parts = split(line, '|');
    REQUIRE(parts.size() == 3);
    DiffOp got = compose(ode(split(parts[0], ';')), ode(split(parts[1], ';')));
    DiffOp want = ode(split(parts[2], ';'));
    CHECK_MESSAGE(zero(got - want, box(1, -1.5, 1.5)), line);
    ++cases;
  }
  CHECK(cases == 10);
}

TEST_CASE("order cap") {
  DiffOp d2(kX, 1);
  d2.add_term(MultiIndex::unit(0) + MultiIndex::unit(0), Field::identity(1));
  DiffOp d3 = compose(d2, DiffOp::partial(kX, 1, 0));
  CHECK_NOTHROW(compose(d2, d2));
  CHECK_THROWS_AS(compose(d3, d2), OrderOverflow);
}

TEST_CASE("cyclic reduction of the free complex model") {
  FermionRep r = complex_fermions(1);
  Field psi = Field::constant(r.psi[0]);
  DiffOp Q = compose(mult(kXY, psi), DiffOp::momentum(kXY, 2, 0) + I * DiffOp::momentum(kXY, 2, 1));
  DiffOp red = reduce_cyclic(Q, {1});
  CHECK(red.coords() == kX);
  DiffOp want = compose(mult(kX, psi), DiffOp::momentum(kX, 2, 0));
  CHECK(res(red - want, box(1)) == 0.0);
}

TEST_CASE("reduction refuses coefficients that depend on a dropped coordinate") {
  DiffOp A(kXY, 1);
  A.add_term(MultiIndex::unit(0), sfield("x*y", kXY));
  SampleSpec s = box(2);
  CHECK_THROWS_AS(reduce_cyclic(A, {1}), ReductionError);
  CHECK_THROWS_AS(reduce_cyclic(A, {1}, &s), ReductionError);
  // mask says y, value does not: the numeric check lets it through
  DiffOp B(kXY, 1);
  B.add_term(MultiIndex::unit(0), sfield("x + y - y", kXY));
  CHECK_NOTHROW(reduce_cyclic(B, {1}, &s));
}

TEST_CASE("reduction commutes with brackets") {
  std::mt19937_64 rng(37);
  const std::vector<std::string> c3{"x", "y", "z"};
  auto indep = [&](int order) {
    DiffOp op(c3, 2);
    std::normal_distribution<double> nd;
    const char* fns[] = {"x*y", "sin(x) + y^2", "exp(y)", "x - y"};
    for (int t = 0; t < 3; ++t) {
      MultiIndex a;
      for (int j = 0; j < order; ++j) a = a + MultiIndex::unit((t + j) % 3);
      Mat m(2, 2);
      for (int i = 0; i < 4; ++i) m(i / 2, i % 2) = cplx(nd(rng), nd(rng));
      op.add_term(a, sfield(fns[t], c3) * Field::constant(m));
    }
    return op;
  };
  DiffOp A = indep(1), B = indep(2);
  DiffOp lhs = reduce_cyclic(anticommutator(A, B), {2});
  DiffOp rhs = anticommutator(reduce_cyclic(A, {2}), reduce_cyclic(B, {2}));
  CHECK(zero(lhs - rhs, box(2)));
}

TEST_CASE("parallel and serial residuals are identical") {
  std::mt19937_64 rng(41);
  DiffOp A = random_op(rng, kXY, 2, 2, 5);
  auto pts = sample_points(box(2, -1, 1, 64));
  Residual s = residual_serial({&A}, pts), p = residual({&A}, pts);
  CHECK(s.max_abs == p.max_abs);
  CHECK(s.scale == p.scale);
  CHECK(s.argmax_point == p.argmax_point);
}

TEST_CASE("sampling honours exclusions and reports singular points") {
  SampleSpec s = box(1, -1, 1, 30);
  s.exclusions.push_back({Exclusion::Kind::Nonzero, parse("x", kX), 0.5, "x != 0"});
  for (const auto& p : sample_points(s)) CHECK(std::abs(p[0]) > 0.5);
  s.exclusions.push_back({Exclusion::Kind::Positive, parse("x", kX), 2.0, "x > 2"});
  CHECK_THROWS_AS(sample_points(s), SamplingError);
  DiffOp A(kX, 2);
  A.add_term(MultiIndex{}, inverse(Field::grid(2, 2, {parse("x", kX), Expr(0.0), Expr(0.0), Expr(1.0)})));
  SampleSpec bad = box(1, 0, 0, 1);
  CHECK_THROWS_AS(residual(A, sample_points(bad)), PointError);
}

TEST_CASE("zero test is not vacuous") {
  DiffOp d = DiffOp::partial(kX, 1, 0);
  Field f = sfield("sin(x)*x", kX);
  auto [ok, r] = is_zero(compose(d, mult(kX, f)) - compose(mult(kX, f), d), box(1));
  CHECK_FALSE(ok);
  CHECK(r.max_abs > 0.1);
  CHECK(r.argmax_point.size() == 1);
  auto [ok0, r0] = is_zero(DiffOp(kX, 2), box(1));
  CHECK(ok0);
  CHECK(r0.max_abs == 0.0);
}
