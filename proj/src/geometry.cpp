#include "sqm/geometry.hpp"

#include "sqm/clifford.hpp"

#include <map>

namespace sqm {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

// Levi-Civita data from a real frame/coframe pair.
void attach_connection(GeometryData& G) {
  const int D = G.D;
  const Field& F = G.frame;
  const Field& C = G.coframe;
  G.metric = C * transpose(C);
  G.inverse_metric = F * transpose(F);
  std::vector<Field> dg;
  for (int K = 0; K < D; ++K) dg.push_back(deriv(G.metric, K));
  G.christoffel.clear();
  G.spin.clear();
  // Gamma^.(M,K) as one D x 1 node per unordered pair, so symmetry is exact
  std::map<std::pair<int, int>, Field> column;
  for (int M = 0; M < D; ++M)
    for (int K = M; K < D; ++K) {
      std::vector<Field> low;
      for (int L = 0; L < D; ++L)
        low.push_back(linear_combination({entry(dg[static_cast<std::size_t>(M)], L, K), entry(dg[static_cast<std::size_t>(K)], L, M),
                                          entry(dg[static_cast<std::size_t>(L)], M, K)},
                                         {0.5, 0.5, -0.5}));
      column[{M, K}] = G.inverse_metric * assemble(D, 1, low);
    }
  for (int M = 0; M < D; ++M) {
    std::vector<Field> es;
    for (int N = 0; N < D; ++N)
      for (int K = 0; K < D; ++K) es.push_back(entry(column.at({std::min(M, K), std::max(M, K)}), N, 0));
    Field gamma = assemble(D, D, es);
    G.christoffel.push_back(gamma);
    G.spin.push_back(transpose(C) * (deriv(F, M) + gamma * F));
  }
  G.has_connection = true;
}

}  // namespace

GeometryData from_omega(const Field& omega, OmegaKind kind, std::vector<std::string> coords) {
  require(omega.rows() == omega.cols(), "omega must be square");
  GeometryData G;
  G.coords = std::move(coords);
  const Field E = mat_exp(omega), Einv = mat_exp(-omega);
  switch (kind) {
    case OmegaKind::RealSymmetric:
      G.D = omega.rows();
      require(static_cast<int>(G.coords.size()) == G.D, "one coordinate per frame index expected");
      G.frame = transpose(E);
      G.coframe = Einv;
      attach_connection(G);
      // sqrt det e^{-2 omega}
      G.measure = scalar_fn(ExprOp::Exp, -trace(omega));
      break;
    case OmegaKind::Hermitian:
      G.D = omega.rows();
      require(static_cast<int>(G.coords.size()) == G.D, "one coordinate per frame index expected");
      G.frame = transpose(E);
      G.coframe = Einv;
      G.metric = mat_exp(-2.0 * omega);
      G.inverse_metric = mat_exp(2.0 * omega);
      G.measure = scalar_fn(ExprOp::Exp, -trace(omega));
      break;
    case OmegaKind::ComplexDolbeault:
      G.D = 2 * omega.rows();
      require(static_cast<int>(G.coords.size()) == G.D, "two real coordinates per complex index expected");
      G.frame = E;
      G.coframe = Einv;
      G.hermitian_metric = adjoint(E) * E;
      G.metric = *G.hermitian_metric;
      G.inverse_metric = inverse(G.metric);
      G.measure = det(*G.hermitian_metric);
      break;
  }
  return G;
}

GeometryData from_frame(const Field& frame, std::vector<std::string> coords) {
  require(frame.rows() == frame.cols(), "frame must be square");
  GeometryData G;
  G.D = frame.rows();
  G.coords = std::move(coords);
  require(static_cast<int>(G.coords.size()) == G.D, "one coordinate per frame index expected");
  G.frame = frame;
  G.coframe = transpose(inverse(frame));
  attach_connection(G);
  G.measure = scalar_fn(ExprOp::Pow, det(G.metric), 1, 2);
  return G;
}

Field covariant_derivative(const GeometryData& g, const Field& X, int P) {
  require(g.has_connection, "geometry has no Levi-Civita connection");
  const Field& gam = g.christoffel.at(static_cast<std::size_t>(P));
  return deriv(X, P) - transpose(gam) * X - X * gam;
}

ComplexStructure frame_structure(const GeometryData& g, const Mat& flat, std::string label) {
  require(flat.rows() == g.D && flat.cols() == g.D, "flat structure does not match dimension");
  return {g.coframe * Field::constant(flat) * transpose(g.frame), std::move(label)};
}

Field lowered(const GeometryData& g, const ComplexStructure& I) { return I.J * g.metric; }

Mat canonical_structure(int a, bool bar, int D) {
  if (D % 4 != 0) throw std::invalid_argument("canonical quaternionic structure needs D = 4m");
  Mat m = Mat::Zero(D, D);
  for (int b = 0; b < D; b += 4) m.block(b, b, 4, 4) = -eta_matrix(a, bar);
  return m;
}

std::vector<CheckReport> check_complex_structure(const ComplexStructure& I, const GeometryData& g, const SampleSpec& s,
                                                 Expect covariant) {
  const Field low = lowered(g, I);
  std::vector<CheckReport> out;
  out.push_back(check_fields_zero("I^2 = -1", {I.label}, {I.J * I.J + Field::identity(g.D)}, s));
  out.push_back(check_fields_zero("I_MN antisymmetric", {I.label}, {low + transpose(low)}, s));
  std::vector<Field> cov;
  for (int P = 0; P < g.D; ++P) cov.push_back(covariant_derivative(g, low, P));
  out.push_back(check_fields_zero("D_P I_MN = 0", {I.label}, cov, s, covariant));
  return out;
}

CheckReport check_quaternion(const ComplexStructure& I1, const ComplexStructure& I2, const ComplexStructure& I3,
                             const SampleSpec& s, Expect e) {
  const ComplexStructure* I[3] = {&I1, &I2, &I3};
  const int D = I1.J.rows();
  std::vector<Field> fs;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      std::vector<Field> terms{I[a]->J * I[b]->J};
      std::vector<cplx> w{1.0};
      if (a == b) {
        terms.push_back(Field::identity(D));
        w.push_back(1.0);
      }
      for (int c = 0; c < 3; ++c)
        if (double eps = levi_civita(a, b, c); eps != 0) {
          terms.push_back(I[c]->J);
          w.push_back(-eps);
        }
      fs.push_back(linear_combination(terms, w));
    }
  return check_fields_zero("I^a I^b = -delta + eps I^c", {I1.label, I2.label, I3.label}, fs, s, e);
}

std::vector<CheckReport> check_metric(const GeometryData& g, const SampleSpec& s) {
  std::vector<Field> cov, sym;
  for (int P = 0; P < g.D; ++P) cov.push_back(covariant_derivative(g, g.metric, P));
  for (int M = 0; M < g.D; ++M)
    for (int K = M + 1; K < g.D; ++K) {
      Mat eM = Mat::Zero(g.D, 1), eK = Mat::Zero(g.D, 1);
      eM(M, 0) = 1;
      eK(K, 0) = 1;
      sym.push_back(g.christoffel[static_cast<std::size_t>(M)] * Field::constant(eK) -
                    g.christoffel[static_cast<std::size_t>(K)] * Field::constant(eM));
    }
  std::vector<CheckReport> out;
  out.push_back(check_fields_zero("nabla g = 0", {"metric"}, cov, s));
  if (!sym.empty()) out.push_back(check_fields_zero("Gamma symmetric", {"christoffel"}, sym, s));
  return out;
}

GibbonsHawking gibbons_hawking(const std::vector<std::array<double, 3>>& centers, const std::vector<double>& weights,
                               double eps, const SampleSpec& s, const std::string& deform) {
  if (centers.size() != weights.size()) throw std::invalid_argument("gibbons_hawking: one weight per center");
  const std::vector<std::string> coords{"x", "y", "z", "t"};
  const Expr x = Expr::var(0), y = Expr::var(1), z = Expr::var(2);
  Expr V(eps), A[3] = {Expr(0.0), Expr(0.0), Expr(0.0)};
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const Expr dx = x - centers[i][0], dy = y - centers[i][1], dz = z - centers[i][2];
    const Expr r = sqrt(dx * dx + dy * dy + dz * dz);
    const double w = weights[i];
    V = V + w / r;
    const Expr k = w / (r * (r + dz));
    A[0] = A[0] + k * dy;
    A[1] = A[1] - k * dx;
  }
  if (!deform.empty()) V = V + parse(deform, coords);
  for (const auto& p : sample_points(s))
    if (evaluate(V, p).real() <= 0) throw std::domain_error("gibbons_hawking: V is not positive on the sample domain");
  const Expr sv = Expr::pow(V, 1, 2), isv = Expr::pow(V, -1, 2);
  std::vector<Expr> F(16, Expr(0.0));
  auto at = [&](int M, int A_) -> Expr& { return F[static_cast<std::size_t>(4 * M + A_)]; };
  for (int i = 0; i < 3; ++i) {
    at(i, i) = isv;
    at(3, i) = -A[i] * isv;
  }
  at(3, 3) = sv;
  GibbonsHawking out;
  // inverse frame written out, so the metric needs no matrix inverse
  std::vector<Expr> C(16, Expr(0.0));
  auto cat = [&](int M, int A_) -> Expr& { return C[static_cast<std::size_t>(4 * M + A_)]; };
  for (int i = 0; i < 3; ++i) {
    cat(i, i) = sv;
    cat(i, 3) = A[i] * isv;
  }
  cat(3, 3) = isv;
  GeometryData& G = out.geometry;
  G.D = 4;
  G.coords = coords;
  G.frame = Field::grid(4, 4, F);
  G.coframe = Field::grid(4, 4, C);
  attach_connection(G);
  // det g = V^2
  G.measure = Field::scalar(V);

  const char* names[2] = {"eta", "eta_bar"};
  std::array<std::array<ComplexStructure, 3>, 2> cand;
  bool passed[2];
  for (int o = 0; o < 2; ++o) {
    passed[o] = true;
    double worst = 0;
    for (int a = 0; a < 3; ++a) {
      cand[o][a] = frame_structure(G, canonical_structure(a, o == 1, 4), std::string("I") + char('1' + a) + "(" + names[o] + ")");
      auto reps = check_complex_structure(cand[o][a], G, s);
      worst = std::max(worst, reps.back().residual.max_abs);
      passed[o] = passed[o] && all_ok(reps);
    }
    out.worst_residual[o] = worst;
  }
  int pick = passed[0] ? 0 : passed[1] ? 1 : -1;
  out.orientation = pick < 0 ? "none" : names[pick];
  out.triple = cand[pick < 0 ? 0 : pick];
  return out;
}

GeometryData warped_kahler(const Expr& u, std::vector<std::string> coords) {
  std::vector<Expr> om(16, Expr(0.0));
  om[0] = -u;
  om[5] = -u;
  return from_omega(Field::grid(4, 4, om), OmegaKind::RealSymmetric, std::move(coords));
}

}  // namespace sqm
