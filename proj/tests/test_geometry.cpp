#include <doctest.h>

#include "op_helpers.hpp"
#include "sqm/clifford.hpp"
#include "sqm/geometry.hpp"

using namespace sqm;
using namespace sqm::testing;

namespace {

const std::vector<std::string> k4{"x1", "x2", "x3", "x4"};

Field diag_grid(const std::vector<std::string>& entries, const std::vector<std::string>& coords) {
  const int n = static_cast<int>(entries.size());
  std::vector<Expr> e(static_cast<std::size_t>(n * n), Expr(0.0));
  for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i * n + i)] = parse(entries[static_cast<std::size_t>(i)], coords);
  return Field::grid(n, n, e);
}

SampleSpec gh_box(int points = 20) {
  SampleSpec s;
  s.box = {{-1, 1}, {-1, 1}, {0.5, 1.5}, {-1, 1}};
  s.n_points = points;
  s.seed = 7;
  return s;
}

// Christoffels from central differences of metric values only.
double christoffel_fd_error(const GeometryData& G, const std::vector<double>& p, double h = 1e-5) {
  const int D = G.D;
  std::vector<Mat> dg;
  for (int K = 0; K < D; ++K) {
    auto a = p, b = p;
    a[static_cast<std::size_t>(K)] += h;
    b[static_cast<std::size_t>(K)] -= h;
    dg.push_back((value(G.metric, a) - value(G.metric, b)) / (2 * h));
  }
  Mat ginv = value(G.metric, p).inverse();
  double worst = 0, scale = 1e-300;
  for (int M = 0; M < D; ++M) {
    Mat got = value(G.christoffel[static_cast<std::size_t>(M)], p);
    for (int N = 0; N < D; ++N)
      for (int K = 0; K < D; ++K) {
        cplx want = 0;
        for (int L = 0; L < D; ++L)
          want += 0.5 * ginv(N, L) * (dg[M](L, K) + dg[K](L, M) - dg[L](M, K));
        worst = std::max(worst, std::abs(got(N, K) - want));
        scale = std::max(scale, std::abs(want));
      }
  }
  return worst / scale;
}

}  // namespace

TEST_CASE("omega = 0 is flat") {
  GeometryData G = from_omega(Field::zero(4, 4), OmegaKind::RealSymmetric, k4);
  std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  CHECK(value(G.metric, p) == Mat(Mat::Identity(4, 4)));
  for (int M = 0; M < 4; ++M) {
    CHECK(value(G.christoffel[M], p).cwiseAbs().maxCoeff() == 0.0);
    CHECK(value(G.spin[M], p).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("one-dimensional frame") {
  const std::vector<std::string> c{"x"};
  GeometryData G = from_omega(Field::scalar(parse("sin(x) + x^2", c)), OmegaKind::RealSymmetric, c);
  for (double x : {-0.7, 0.1, 0.9}) {
    CHECK(std::abs(value(G.metric, {x})(0, 0) - std::exp(-2 * (std::sin(x) + x * x))) < 1e-13);
    CHECK(std::abs(value(G.christoffel[0], {x})(0, 0) + (std::cos(x) + 2 * x)) < 1e-12);
  }
  for (const auto& r : check_metric(G, box(1))) CHECK_MESSAGE(r.verdict == Verdict::Pass, r.name);
}

TEST_CASE("conformally flat frame") {
  GeometryData G = from_omega(diag_grid({"x1*x2 + x3", "x1*x2 + x3", "x1*x2 + x3", "x1*x2 + x3"}, k4),
                              OmegaKind::RealSymmetric, k4);
  std::vector<double> p{0.3, -0.2, 0.5, 0.7};
  Mat g = value(G.metric, p);
  double e = std::exp(-2 * (0.3 * -0.2 + 0.5));
  CHECK((g - e * Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(std::abs(value(G.measure, p)(0, 0) - e * e) < 1e-13);
}

TEST_CASE("connection properties for a generic symmetric omega") {
  Field om = Field::grid(3, 3,
                         {parse("0.3*x*y", {"x", "y", "z"}), parse("0.2*sin(z)", {"x", "y", "z"}), Expr(0.1),
                          parse("0.2*sin(z)", {"x", "y", "z"}), parse("0.4*x", {"x", "y", "z"}), parse("0.1*y*z", {"x", "y", "z"}),
                          Expr(0.1), parse("0.1*y*z", {"x", "y", "z"}), parse("-0.2*y^2", {"x", "y", "z"})});
  GeometryData G = from_omega(om, OmegaKind::RealSymmetric, {"x", "y", "z"});
  SampleSpec s = box(3);
  for (const auto& r : check_metric(G, s)) CHECK_MESSAGE(r.verdict == Verdict::Pass, r.name);
  // exact symmetry of the constructed Christoffels
  for (const auto& p : sample_points(s)) {
    for (int M = 0; M < 3; ++M)
      for (int K = 0; K < 3; ++K) {
        Mat a = value(G.christoffel[M], p), b = value(G.christoffel[K], p);
        for (int N = 0; N < 3; ++N) CHECK(a(N, K) == b(N, M));
      }
    CHECK(christoffel_fd_error(G, p) < 1e-6);
  }
  std::vector<Field> anti;
  for (int M = 0; M < 3; ++M) anti.push_back(G.spin[M] + transpose(G.spin[M]));
  CHECK(check_fields_zero("spin antisymmetric", {}, anti, s).verdict == Verdict::Pass);
}

TEST_CASE("complex structures on flat and warped metrics") {
  Mat eps = Mat::Zero(4, 4);
  eps(0, 1) = 1;
  eps(1, 0) = -1;
  eps(2, 3) = 1;
  eps(3, 2) = -1;
  GeometryData flat = from_omega(Field::zero(4, 4), OmegaKind::RealSymmetric, k4);
  for (const auto& r : check_complex_structure(frame_structure(flat, canonical_structure(0, false, 4)), flat, box(4)))
    CHECK(r.residual.max_abs == 0.0);

  GeometryData warped = warped_kahler(parse("0.3*sin(x1) + 0.2*x1*x2", k4), k4);
  for (const auto& r : check_complex_structure(frame_structure(warped, eps), warped, box(4)))
    CHECK_MESSAGE(r.residual.max_abs < 1e-9, r.name);

  GeometryData broken = warped_kahler(parse("0.3*sin(x1) + 0.5*x3*x2", k4), k4);
  auto reps = check_complex_structure(frame_structure(broken, eps), broken, box(4), Expect::Violated);
  CHECK(reps[0].verdict == Verdict::Pass);
  CHECK(reps[1].verdict == Verdict::Pass);
  CHECK(reps[2].verdict == Verdict::ViolatedAsExpected);
  CHECK(reps[2].residual.max_abs > 1e-3);
}

TEST_CASE("quaternion checks") {
  GeometryData flat = from_omega(Field::zero(4, 4), OmegaKind::RealSymmetric, k4);
  auto I = [&](int a, bool bar) { return frame_structure(flat, canonical_structure(a, bar, 4)); };
  CHECK(check_quaternion(I(0, false), I(1, false), I(2, false), box(4)).residual.max_abs == 0.0);
  CHECK(check_quaternion(I(0, true), I(1, true), I(2, true), box(4)).residual.max_abs == 0.0);
  auto mixed = check_quaternion(I(0, false), I(1, false), I(2, true), box(4), Expect::Violated);
  CHECK(mixed.verdict == Verdict::ViolatedAsExpected);
}

TEST_CASE("Gibbons-Hawking with V = 1 is flat in both orientations") {
  auto gh = gibbons_hawking({}, {}, 1.0, gh_box());
  CHECK(gh.orientation == "eta");
  CHECK(gh.worst_residual[0] == 0.0);
  CHECK(gh.worst_residual[1] == 0.0);
}

TEST_CASE("one-center Gibbons-Hawking metric is hyper-Kahler") {
  SampleSpec s = gh_box();
  auto gh = gibbons_hawking({{0.0, 0.0, 0.0}}, {0.5}, 1.0, s);
  MESSAGE("orientation " << gh.orientation << ", residuals " << gh.worst_residual[0] << " / " << gh.worst_residual[1]);
  CHECK(gh.orientation != "none");
  CHECK(std::min(gh.worst_residual[0], gh.worst_residual[1]) < 1e-8);
  CHECK(std::max(gh.worst_residual[0], gh.worst_residual[1]) > 1e-3);
  CHECK(check_quaternion(gh.triple[0], gh.triple[1], gh.triple[2], s).verdict == Verdict::Pass);
  for (const auto& r : check_metric(gh.geometry, s)) CHECK_MESSAGE(r.verdict == Verdict::Pass, r.name);
  for (const auto& p : sample_points(gh_box(5))) CHECK(christoffel_fd_error(gh.geometry, p) < 1e-6);
}

TEST_CASE("non-harmonic V breaks both orientations") {
  auto gh = gibbons_hawking({{0.0, 0.0, 0.0}}, {0.5}, 1.0, gh_box(), "x^2");
  CHECK(gh.orientation == "none");
  CHECK(gh.worst_residual[0] > 1e-3);
  CHECK(gh.worst_residual[1] > 1e-3);
}
