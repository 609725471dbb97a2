#include "sqm/zoo.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sqm {

namespace {

using Coords = std::vector<std::string>;
constexpr cplx I1{0.0, 1.0};
const double kSqrt2 = std::sqrt(2.0);
const double kPi = std::numbers::pi;

Field K(const Mat& m) { return Field::constant(m); }
Field S(const Expr& e) { return Field::scalar(e); }
Field sc(const Expr& e, const Mat& m) { return S(e) * K(m); }

// c F p_m
void add_p(DiffOp& op, int m, const Field& F, cplx c = 1.0) { op.add_term(MultiIndex::unit(m), F, -I1 * c); }
void add_0(DiffOp& op, const Field& F, cplx c = 1.0) { op.add_term(MultiIndex{}, F, c); }
// c F d_m d_n
void add_dd(DiffOp& op, int m, int n, const Field& F, cplx c = 1.0) {
  op.add_term(MultiIndex::unit(m) + MultiIndex::unit(n), F, c);
}

DiffOp half(const DiffOp& a) { return cplx(0.5) * a; }

DiffOp rename(const DiffOp& a, const Coords& coords) {
  if (static_cast<int>(coords.size()) != a.ncoords()) throw ShapeError("rename: coordinate count differs");
  DiffOp r(coords, a.dim());
  for (const auto& [al, F] : a.terms()) r.add_term(al, F);
  return r;
}

SampleSpec unit_box(std::size_t n, double lo = -1, double hi = 1) {
  SampleSpec s;
  s.box.assign(n, {lo, hi});
  return s;
}

Field sum_fields(const std::vector<Field>& fs, int dim) {
  if (fs.empty()) return Field::zero(dim, dim);
  return linear_combination(fs, std::vector<cplx>(fs.size(), 1.0));
}

// psi^M = e^M_A psi_A
std::vector<Field> world_fermions(const Field& frame, const std::vector<Mat>& ps) {
  const int D = frame.rows();
  std::vector<Field> out;
  for (int M = 0; M < D; ++M) {
    std::vector<Field> t;
    for (int A = 0; A < D; ++A) t.push_back(entry(frame, M, A) * K(ps[static_cast<std::size_t>(A)]));
    out.push_back(sum_fields(t, static_cast<int>(ps[0].rows())));
  }
  return out;
}

// sum_N X_N (p_N - i Omega_{N,AB} Y_A Z_B)
DiffOp covariant_charge(const GeometryData& G, const FermionRep& rep, const std::vector<Field>& X, Ordering ord) {
  DiffOp op(G.coords, rep.dim());
  for (int N = 0; N < G.D; ++N) {
    const Field& XN = X[static_cast<std::size_t>(N)];
    add_p(op, N, XN);
    add_0(op, XN * bilinear(rep, G.spin[static_cast<std::size_t>(N)], ord), -I1);
  }
  return op;
}

DiffOp laplacian_half(const Coords& coords, int dim) {  // p^2 / 2
  DiffOp op(coords, dim);
  for (int m = 0; m < static_cast<int>(coords.size()); ++m) add_dd(op, m, m, Field::identity(dim), -0.5);
  return op;
}

ModelRelation relation(std::string name, std::vector<std::string> operands, std::function<DiffOp()> diff,
                       Expect e = Expect::Holds, double tol = kPassTol) {
  return {std::move(name), std::move(operands), std::move(diff), e, tol};
}

ModelRelation equal(const std::string& a, const DiffOp& A, const std::string& b, const DiffOp& B,
                    double tol = kPassTol, Expect e = Expect::Holds) {
  return relation(a + " = " + b, {a, b}, [A, B] { return A - B; }, e, tol);
}

void finish_n2(Model& m, const DiffOp& Q, const DiffOp& Qbar, const std::string& suffix = "") {
  m.supercharges.push_back({{"Q" + suffix, Q}, {"Qbar" + suffix, Qbar}});
}

Expr var(int i) { return Expr::var(i); }

// remaps coordinate k of an expression to coordinate map[k]
Expr remap(const Expr& e, const std::vector<int>& map) {
  const ExprNode& n = e.node();
  switch (n.op) {
    case ExprOp::Const: return Expr(n.value);
    case ExprOp::Var: return Expr::var(map.at(static_cast<std::size_t>(n.var)));
    case ExprOp::Neg: return -remap(Expr(n.a), map);
    case ExprOp::Add: return remap(Expr(n.a), map) + remap(Expr(n.b), map);
    case ExprOp::Sub: return remap(Expr(n.a), map) - remap(Expr(n.b), map);
    case ExprOp::Mul: return remap(Expr(n.a), map) * remap(Expr(n.b), map);
    case ExprOp::Div: return remap(Expr(n.a), map) / remap(Expr(n.b), map);
    case ExprOp::Pow: return Expr::pow(remap(Expr(n.a), map), n.p, n.q);
    default: return Expr::unary(n.op, remap(Expr(n.a), map));
  }
}

}  // namespace

const char* to_string(Algebra a) {
  switch (a) {
    case Algebra::N2: return "N=2";
    case Algebra::N4: return "N=4";
    case Algebra::N8: return "N=8";
    case Algebra::Central: return "central";
    case Algebra::Gauge: return "gauge";
    case Algebra::Exploratory: return "exploratory";
  }
  return "?";
}

const DiffOp& Model::op(const std::string& n) const {
  for (const auto& [q, qb] : supercharges) {
    if (q.name == n) return q.op;
    if (qb.name == n) return qb.op;
  }
  if (n == "H") return hamiltonian;
  for (const auto* list : {&hermitian, &constraints, &extras})
    for (const auto& o : *list)
      if (o.name == n) return o.op;
  throw std::out_of_range("model " + name + " has no operator " + n);
}

bool Model::has_op(const std::string& n) const {
  try {
    op(n);
    return true;
  } catch (const std::out_of_range&) {
    return false;
  }
}

std::vector<std::string> Model::op_names() const {
  std::vector<std::string> out;
  for (const auto& [q, qb] : supercharges) {
    out.push_back(q.name);
    out.push_back(qb.name);
  }
  for (const auto& o : hermitian) out.push_back(o.name);
  out.push_back("H");
  for (const auto* list : {&constraints, &extras})
    for (const auto& o : *list) out.push_back(o.name);
  return out;
}

std::vector<std::string> complex_coords(int d) {
  std::vector<std::string> c;
  for (int a = 1; a <= d; ++a) {
    c.push_back("x" + std::to_string(a));
    c.push_back("y" + std::to_string(a));
  }
  return c;
}

std::vector<std::string> real_coords(int D, const std::string& stem) {
  std::vector<std::string> c;
  for (int a = 1; a <= D; ++a) c.push_back(stem + std::to_string(a));
  return c;
}

DiffOp mult(const std::vector<std::string>& coords, const Field& f) { return DiffOp::multiplication(coords, f); }
DiffOp mult(const std::vector<std::string>& coords, const Mat& m) { return DiffOp::multiplication(coords, K(m)); }

DiffOp momentum_sum(const std::vector<std::string>& coords, const std::vector<Field>& X) {
  if (X.size() != coords.size()) throw ShapeError("momentum_sum: one coefficient per coordinate");
  DiffOp op(coords, X.at(0).rows());
  for (int m = 0; m < static_cast<int>(X.size()); ++m) add_p(op, m, X[static_cast<std::size_t>(m)]);
  return op;
}

// ---------------------------------------------------------------------------

Model free_complex(int d) {
  if (d < 1 || d > 6) throw std::invalid_argument("free_complex: 1 <= d <= 6");
  Model m;
  m.name = "free_complex";
  m.coords = complex_coords(d);
  m.rep = complex_fermions(d);
  const int n = m.rep.dim();
  // sqrt2 pi_a = p_x + i p_y
  DiffOp Q(m.coords, n);
  for (int a = 0; a < d; ++a) {
    add_p(Q, 2 * a, K(m.rep.psi[a]));
    add_p(Q, 2 * a + 1, K(m.rep.psi[a]), I1);
  }
  const DiffOp Qbar = naive_dagger(Q);
  finish_n2(m, Q, Qbar);
  m.hamiltonian = half(anticommutator(Qbar, Q));
  m.formulas["Q"] = "sqrt2 psi_a pi_a";
  m.algebra = Algebra::N2;
  if (d % 2 == 0) {
    // S = sqrt2 eps_ab psi_a pibar_b within each pair of complex indices
    DiffOp Sop(m.coords, n);
    for (int k = 0; k < d; k += 2)
      for (auto [a, b, s] : {std::tuple{k, k + 1, 1.0}, std::tuple{k + 1, k, -1.0}}) {
        add_p(Sop, 2 * b, K(m.rep.psi[a]), s);
        add_p(Sop, 2 * b + 1, K(m.rep.psi[a]), -I1 * s);
      }
    finish_n2(m, Sop, naive_dagger(Sop), "");
    m.supercharges.back().first.name = "S";
    m.supercharges.back().second.name = "Sbar";
    m.formulas["S"] = "sqrt2 eps_ab psi_a pibar_b";
    m.algebra = Algebra::N4;
  }
  m.recipe = {"free_complex(" + std::to_string(d) + ")"};
  m.samples = unit_box(m.coords.size());
  m.replay = [d] { return free_complex(d); };
  return m;
}

Model free_real(int D) {
  if (D < 1 || D > 8) throw std::invalid_argument("free_real: 1 <= D <= 8");
  Model m;
  m.name = "free_real";
  m.coords = real_coords(D);
  m.rep = complex_fermions(D);
  DiffOp Q(m.coords, m.rep.dim());
  for (int A = 0; A < D; ++A) add_p(Q, A, K(m.rep.psi[A]));
  finish_n2(m, Q, naive_dagger(Q));
  m.hamiltonian = half(anticommutator(m.op("Qbar"), Q));
  std::vector<int> ys;
  for (int a = 0; a < D; ++a) ys.push_back(2 * a + 1);
  const DiffOp red = reduce_cyclic(free_complex(D).op("Q"), ys);
  m.extras.push_back({"Q_reduced", red});
  m.relations.push_back(equal("Q", Q, "Q_reduced", red));
  m.relations.push_back(equal("H", m.hamiltonian, "p^2/2", laplacian_half(m.coords, m.rep.dim())));
  m.formulas["Q"] = "p_A psi_A";
  m.recipe = {"free_complex(" + std::to_string(D) + ")", "reduce y1..y" + std::to_string(D)};
  m.samples = unit_box(m.coords.size());
  m.replay = [D] { return free_real(D); };
  return m;
}

Model witten(const Expr& W) {
  if (W.arity() > 1) throw std::invalid_argument("witten: W may depend on x only");
  Model m;
  m.name = "witten";
  m.coords = {"x"};
  m.rep = complex_fermions(1);
  const Mat& psi = m.rep.psi[0];
  const Mat& psib = m.rep.psibar[0];
  const Field w = S(W), w1 = deriv(w, 0), w2 = deriv(w, MultiIndex::unit(0) + MultiIndex::unit(0));

  const DiffOp base = rename(reduce_cyclic(free_complex(1).op("Q"), {1}), m.coords);
  const DiffOp Q = similarity(base, w);
  DiffOp direct(m.coords, 2);
  add_p(direct, 0, K(psi));
  add_0(direct, w1 * K(psi), I1);
  const DiffOp Qbar = naive_dagger(Q);
  finish_n2(m, Q, Qbar);
  m.hamiltonian = half(anticommutator(Qbar, Q));

  DiffOp Hf(m.coords, 2);
  add_dd(Hf, 0, 0, Field::identity(2), -0.5);
  add_0(Hf, (w1 * w1) * Field::identity(2), 0.5);
  add_0(Hf, w2 * K(psib * psi - psi * psib), 0.5);

  m.extras.push_back({"Q_direct", direct});
  m.extras.push_back({"H_formula", Hf});
  m.relations.push_back(equal("Q", Q, "Q_direct", direct, 1e-10));
  m.relations.push_back(equal("H", m.hamiltonian, "H_formula", Hf));
  m.formulas["Q"] = "psi (p + i W'(x))";
  m.formulas["W"] = print(W, m.coords);
  m.recipe = {"free_complex(1)", "reduce y1", "similarity W = " + print(W, m.coords)};
  m.samples = unit_box(1);
  m.replay = [W] { return witten(W); };
  return m;
}

Model dolbeault(const Field& omega, int d, std::optional<Expr> W) {
  if (omega.rows() != d || omega.cols() != d) throw ShapeError("dolbeault: omega must be d x d");
  Model m;
  m.name = W ? "dolbeault_twisted" : "dolbeault";
  const Model free = free_complex(d);
  m.coords = free.coords;
  m.rep = free.rep;
  const GeometryData G = from_omega(omega, OmegaKind::ComplexDolbeault, m.coords);
  const Field R = bilinear(m.rep, omega, Ordering::PsiPsibar);
  const DiffOp Q0 = similarity(free.op("Q"), R);

  // sqrt2 psi_d (e^w)_dc [pi_c - i (e^w d_c e^-w)_ab psi_a psibar_b],  sqrt2 d_c = d_x + i d_y
  const Field E = mat_exp(omega), Einv = mat_exp(-omega);
  DiffOp formula(m.coords, m.rep.dim());
  for (int c = 0; c < d; ++c) {
    std::vector<Field> t;
    for (int dd = 0; dd < d; ++dd) t.push_back(entry(E, dd, c) * K(m.rep.psi[dd]));
    const Field Psi = sum_fields(t, m.rep.dim());
    add_p(formula, 2 * c, Psi);
    add_p(formula, 2 * c + 1, Psi, I1);
    const Field conn = E * linear_combination({deriv(Einv, 2 * c), deriv(Einv, 2 * c + 1)}, {1.0, I1});
    add_0(formula, Psi * bilinear(m.rep, conn, Ordering::PsiPsibar), -I1);
  }

  DiffOp Q = Q0;
  m.recipe = {"free_complex(" + std::to_string(d) + ")", "similarity R = omega_ab psi_a psibar_b"};
  if (W) {
    const Field twist = S(*W) - 0.25 * scalar_fn(ExprOp::Log, G.measure);
    Q = similarity(Q0, twist);
    m.extras.push_back({"Q_untwisted", Q0});
    m.formulas["W"] = print(*W, m.coords);
    m.recipe.push_back("similarity G = W - 1/4 ln det h");
  }
  m.measure = G.measure;
  const DiffOp Qbar = adjoint_with_measure(Q, m.measure);
  finish_n2(m, Q, Qbar);
  m.hamiltonian = half(anticommutator(Qbar, Q));
  m.extras.push_back({"Q_formula", formula});
  m.relations.push_back(equal(W ? "Q_untwisted" : "Q", Q0, "Q_formula", formula));
  m.formulas["Q"] = "sqrt2 psi_d (e^w)_dc [pi_c - i (e^w d_c e^-w)_ab psi_a psibar_b]";
  m.formulas["measure"] = "det h, h = e^(w^dagger) e^w";
  m.recipe.push_back("Qbar = measure adjoint, mu = det h");
  m.samples = unit_box(m.coords.size());
  m.replay = [omega, d, W] { return dolbeault(omega, d, W); };
  return m;
}

namespace {

DiffOp apply_torsion(const DiffOp& Q, const FermionRep& rep, const Field& B, TorsionKind kind) {
  const Field R =
      bilinear(rep, B, kind == TorsionKind::Holomorphic ? Ordering::PsiPsi : Ordering::PsibarPsibar);
  return similarity(Q, R);
}

}  // namespace

Model de_rham(const Field& omega, int D, std::optional<Expr> W, std::optional<Field> torsion) {
  if (omega.rows() != D || omega.cols() != D) throw ShapeError("de_rham: omega must be D x D");
  Model m;
  m.name = "de_rham";
  const Model free = free_real(D);
  m.coords = free.coords;
  m.rep = free.rep;
  const GeometryData G = from_omega(omega, OmegaKind::RealSymmetric, m.coords);
  const Field R = bilinear(m.rep, omega, Ordering::PsiPsibar);
  const DiffOp Qsim = similarity(free.op("Q"), R);
  const DiffOp Qspin = covariant_charge(G, m.rep, world_fermions(G.frame, m.rep.psi), Ordering::PsiPsibar);
  const DiffOp Qbar_formula =
      covariant_charge(G, m.rep, world_fermions(G.frame, m.rep.psibar), Ordering::PsibarPsi);
  m.measure = G.measure;
  const DiffOp Qbar0 = adjoint_with_measure(Qsim, m.measure);

  m.extras.push_back({"Q_similarity", Qsim});
  m.extras.push_back({"Q_spin", Qspin});
  m.extras.push_back({"Qbar_formula", Qbar_formula});
  m.relations.push_back(equal("Q_similarity", Qsim, "Q_spin", Qspin));
  m.relations.push_back(equal("adjoint_mu(Q_similarity)", Qbar0, "Qbar_formula", Qbar_formula));
  m.recipe = {"free_real(" + std::to_string(D) + ")", "similarity R = omega_AB psi_A psibar_B"};

  DiffOp Q = Qsim;
  if (W) {
    Q = similarity(Q, S(*W));
    m.name += "+W";
    m.formulas["W"] = print(*W, m.coords);
    m.recipe.push_back("similarity W = " + print(*W, m.coords));
  }
  if (torsion) {
    // B_MN psi^M psi^N = (e^T B e)_AB psi_A psi_B
    Q = apply_torsion(Q, m.rep, transpose(G.frame) * *torsion * G.frame, TorsionKind::Holomorphic);
    m.name += "+torsion";
    m.recipe.push_back("similarity B_MN psi^M psi^N");
  }
  const DiffOp Qbar = (W || torsion) ? adjoint_with_measure(Q, m.measure) : Qbar0;
  finish_n2(m, Q, Qbar);
  m.hamiltonian = half(anticommutator(Qbar, Q));
  m.formulas["Q"] = "psi^M (p_M - i Omega_{M,AB} psi_A psibar_B)";
  m.formulas["Qbar"] = "psibar^M (p_M - i Omega_{M,AB} psibar_A psi_B)";
  m.formulas["measure"] = "sqrt det g = e^(-tr omega)";
  m.recipe.push_back("Qbar = measure adjoint, mu = sqrt det g");
  m.samples = unit_box(m.coords.size());
  m.geometry_checks = [G](const SampleSpec& s, Expect) { return check_metric(G, s); };
  m.replay = [omega, D, W, torsion] { return de_rham(omega, D, W, torsion); };
  return m;
}

Model quasicomplex(const Field& omega, int D) {
  if (omega.rows() != D || omega.cols() != D) throw ShapeError("quasicomplex: omega must be D x D");
  if (omega.mask() >> D) throw std::invalid_argument("quasicomplex: omega may depend on x1..xD only");
  Model m;
  m.name = "quasicomplex";
  const Model free = free_real(D);
  m.coords = free.coords;
  m.rep = free.rep;
  const Field R = bilinear(m.rep, omega, Ordering::PsiPsibar);
  const DiffOp Q = similarity(free.op("Q"), R);
  m.measure = scalar_fn(ExprOp::Exp, -trace(omega));
  const DiffOp Qbar = adjoint_with_measure(Q, m.measure);
  finish_n2(m, Q, Qbar);
  m.hamiltonian = half(anticommutator(Qbar, Q));

  // other side of the rhombus: Dolbeault with the same omega, then drop the y's
  std::vector<int> to_complex, ys;
  for (int a = 0; a < D; ++a) {
    to_complex.push_back(2 * a);
    ys.push_back(2 * a + 1);
  }
  const Field omega_c = [&] {
    if (omega.node().op == FieldOp::Const) return omega;
    if (omega.node().op != FieldOp::Grid)
      throw std::invalid_argument("quasicomplex: omega must be a constant or an expression grid");
    std::vector<Expr> es;
    for (const auto& e : omega.node().grid) es.push_back(remap(e, to_complex));
    return Field::grid(D, D, es);
  }();
  const Model dolb = dolbeault(omega_c, D);
  const SampleSpec check = unit_box(2 * static_cast<std::size_t>(D));
  const DiffOp Qred = reduce_cyclic(dolb.op("Q"), ys, &check);
  const DiffOp Qbar_red = reduce_cyclic(dolb.op("Qbar"), ys, &check);
  const DiffOp Qbar_red_direct = adjoint_with_measure(Qred, reduce_field(dolb.measure, 2 * D, ys));
  m.extras.push_back({"Q_reduced", Qred});
  m.extras.push_back({"Qbar_reduced", Qbar_red});
  m.relations.push_back(equal("Q", Q, "Q_reduced", Qred));
  m.relations.push_back(equal("reduce(adjoint_deth(Q_dolbeault))", Qbar_red, "adjoint_reduced_deth(Q_reduced)",
                              Qbar_red_direct));
  m.formulas["Q"] = "psi_B (e^w)_BA p_A + ...";
  m.formulas["measure"] = "e^(-tr omega)";
  m.recipe = {"free_real(" + std::to_string(D) + ")", "similarity R = omega_AB psi_A psibar_B",
              "cross-check: dolbeault(" + std::to_string(D) + ") then reduce y's"};
  m.samples = unit_box(m.coords.size());
  m.replay = [omega, D] { return quasicomplex(omega, D); };
  return m;
}

namespace {

// Q, S-type charges built from the spin connection, with Qbar-type partners by
// the sqrt det g adjoint.
struct CovariantCharges {
  DiffOp Q, Qbar;
  std::vector<DiffOp> S, Sbar;
  std::vector<ComplexStructure> J;
};

CovariantCharges covariant_charges(const GeometryData& G, const FermionRep& rep, const std::vector<Mat>& flats) {
  CovariantCharges out;
  const auto psiM = world_fermions(G.frame, rep.psi);
  out.Q = covariant_charge(G, rep, psiM, Ordering::PsiPsibar);
  out.Qbar = adjoint_with_measure(out.Q, G.measure);
  for (std::size_t a = 0; a < flats.size(); ++a) {
    ComplexStructure J = frame_structure(G, flats[a], "I" + std::to_string(a + 1));
    std::vector<Field> X;
    for (int N = 0; N < G.D; ++N) {
      std::vector<Field> t;
      for (int M = 0; M < G.D; ++M) t.push_back(entry(J.J, M, N) * psiM[static_cast<std::size_t>(M)]);
      X.push_back(sum_fields(t, rep.dim()));
    }
    out.S.push_back(covariant_charge(G, rep, X, Ordering::PsiPsibar));
    out.Sbar.push_back(adjoint_with_measure(out.S.back(), G.measure));
    out.J.push_back(std::move(J));
  }
  return out;
}

// F+ = 1/2 I_AB psibar_A psibar_B, F- = 1/2 I_AB psi_A psi_B
Mat f_plus(const FermionRep& rep, const Mat& I) {
  Mat m = Mat::Zero(rep.dim(), rep.dim());
  for (int A = 0; A < I.rows(); ++A)
    for (int B = 0; B < I.cols(); ++B) m += 0.5 * I(A, B) * rep.psibar[A] * rep.psibar[B];
  return m;
}
Mat f_minus(const FermionRep& rep, const Mat& I) {
  Mat m = Mat::Zero(rep.dim(), rep.dim());
  for (int A = 0; A < I.rows(); ++A)
    for (int B = 0; B < I.cols(); ++B) m += 0.5 * I(A, B) * rep.psi[A] * rep.psi[B];
  return m;
}

// psi_A I_AB p_B, the flat-space S in the sign convention of the curved formula
DiffOp flat_s(const Coords& coords, const FermionRep& rep, const Mat& I) {
  DiffOp op(coords, rep.dim());
  for (int B = 0; B < I.cols(); ++B) {
    Mat c = Mat::Zero(rep.dim(), rep.dim());
    for (int A = 0; A < I.rows(); ++A) c += I(A, B) * rep.psi[A];
    add_p(op, B, K(c));
  }
  return op;
}

}  // namespace

Model kahler(const GeometryData& G, const Mat& I_flat, const std::string& label, std::optional<Field> omega) {
  if (!G.has_connection) throw std::invalid_argument("kahler: geometry needs a Levi-Civita connection");
  Model m;
  m.name = label;
  m.coords = G.coords;
  m.rep = complex_fermions(G.D);
  const auto cc = covariant_charges(G, m.rep, {I_flat});
  m.measure = G.measure;
  finish_n2(m, cc.Q, cc.Qbar);
  m.supercharges.push_back({{"S", cc.S[0]}, {"Sbar", cc.Sbar[0]}});
  m.hamiltonian = half(anticommutator(cc.Qbar, cc.Q));
  m.extras.push_back({"F+", mult(m.coords, f_plus(m.rep, I_flat))});
  m.extras.push_back({"F-", mult(m.coords, f_minus(m.rep, I_flat))});
  m.extras.push_back({"F0", mult(m.coords, fermion_number(m.rep))});
  if (omega) {
    const Field R = bilinear(m.rep, *omega, Ordering::PsiPsibar);
    const DiffOp Qs = similarity(free_real(G.D).op("Q"), R);
    const DiffOp Ss = similarity(flat_s(m.coords, m.rep, I_flat), R);
    m.extras.push_back({"S_similarity", Ss});
    m.relations.push_back(equal("Q", cc.Q, "Q_similarity", Qs));
    m.relations.push_back(equal("S", cc.S[0], "S_similarity", Ss));
  }
  m.algebra = Algebra::N4;
  m.formulas["Q"] = "psi^M (p_M - i Omega_{M,AB} psi_A psibar_B)";
  m.formulas["S"] = "psi^M I_M^N (p_N - i Omega_{N,AB} psi_A psibar_B)";
  m.formulas["F+"] = "1/2 I_AB psibar_A psibar_B";
  m.recipe = {"geometry " + label, "covariant Q, S from the spin connection", "Qbar, Sbar = measure adjoints"};
  m.samples = unit_box(m.coords.size());
  const ComplexStructure J = cc.J[0];
  m.geometry_checks = [G, J](const SampleSpec& s, Expect e) {
    auto r = check_metric(G, s);
    for (auto& c : check_complex_structure(J, G, s, e)) r.push_back(std::move(c));
    return r;
  };
  m.replay = [G, I_flat, label, omega] { return kahler(G, I_flat, label, omega); };
  return m;
}

Model hyperkahler(const GeometryData& G, const std::array<Mat, 3>& I_flat, const std::string& label) {
  if (!G.has_connection) throw std::invalid_argument("hyperkahler: geometry needs a Levi-Civita connection");
  Model m;
  m.name = label;
  m.coords = G.coords;
  m.rep = complex_fermions(G.D);
  const auto cc = covariant_charges(G, m.rep, {I_flat[0], I_flat[1], I_flat[2]});
  m.measure = G.measure;
  finish_n2(m, cc.Q, cc.Qbar);
  for (int a = 0; a < 3; ++a) {
    const std::string k = std::to_string(a + 1);
    m.supercharges.push_back({{"S" + k, cc.S[a]}, {"Sbar" + k, cc.Sbar[a]}});
    m.extras.push_back({"F" + k + "+", mult(m.coords, f_plus(m.rep, I_flat[a]))});
    m.extras.push_back({"F" + k + "-", mult(m.coords, f_minus(m.rep, I_flat[a]))});
  }
  m.extras.push_back({"F0", mult(m.coords, fermion_number(m.rep))});
  m.hamiltonian = half(anticommutator(cc.Qbar, cc.Q));
  m.algebra = Algebra::N8;
  m.formulas["Q"] = "psi^M (p_M - i Omega_{M,AB} psi_A psibar_B)";
  m.formulas["S^a"] = "psi^M (I^a)_M^N (p_N - i Omega_{N,AB} psi_A psibar_B)";
  m.recipe = {"geometry " + label, "covariant Q, S^a for a quaternionic triple", "Qbar, Sbar^a = measure adjoints"};
  m.samples = unit_box(m.coords.size());
  const auto J = cc.J;
  m.geometry_checks = [G, J](const SampleSpec& s, Expect e) {
    auto r = check_metric(G, s);
    for (const auto& j : J)
      for (auto& c : check_complex_structure(j, G, s, e)) r.push_back(std::move(c));
    r.push_back(check_quaternion(J[0], J[1], J[2], s));
    return r;
  };
  m.replay = [G, I_flat, label] { return hyperkahler(G, I_flat, label); };
  return m;
}

Model hkt_conformal(const Expr& g, const std::vector<std::string>& drop) {
  Model m;
  m.name = "hkt_conformal";
  const Model free = free_complex(2);
  m.coords = free.coords;
  m.rep = free.rep;
  const int n = m.rep.dim();
  const Mat Nf = fermion_number(m.rep);
  const Field gf = S(g);
  const Field R = gf * K(Nf);
  DiffOp Q = similarity(free.op("Q"), R), Sop = similarity(free.op("S"), R);
  // barred charges are adjoints under mu = e^{-2g}; rotating them with e^{-R}
  // alone (flat measure) leaves {Q, Sbar} != 0
  m.measure = scalar_fn(ExprOp::Exp, -2.0 * gf);
  DiffOp Qbar = adjoint_with_measure(Q, m.measure), Sbar = adjoint_with_measure(Sop, m.measure);
  const DiffOp Sbar_flat = similarity(free.op("Sbar"), -R);
  // sqrt2 f psi_a (pi_a + i (d_a f / f) N),  sqrt2 d_a = d_x + i d_y, f = e^g
  const Field f = scalar_fn(ExprOp::Exp, gf);
  auto dplus = [&](int a, cplx s) { return linear_combination({deriv(gf, 2 * a), deriv(gf, 2 * a + 1)}, {1.0, s}); };
  DiffOp Qd(m.coords, n), Sd(m.coords, n);
  for (int a = 0; a < 2; ++a) {
    const Field fpsi = f * K(m.rep.psi[a]);
    add_p(Qd, 2 * a, fpsi);
    add_p(Qd, 2 * a + 1, fpsi, I1);
    add_0(Qd, dplus(a, I1) * (fpsi * K(Nf)), I1);
  }
  // sqrt2 f eps_ab psi_a (pibar_b + i (dbar_b f / f) N)
  for (auto [a, b, s] : {std::tuple{0, 1, 1.0}, std::tuple{1, 0, -1.0}}) {
    const Field fpsi = f * K(m.rep.psi[a]);
    add_p(Sd, 2 * b, fpsi, s);
    add_p(Sd, 2 * b + 1, fpsi, -I1 * s);
    add_0(Sd, dplus(b, -I1) * (fpsi * K(Nf)), I1 * s);
  }
  m.relations.push_back(equal("Q", Q, "Q_direct", Qd, 1e-10));
  m.relations.push_back(equal("S", Sop, "S_direct", Sd, 1e-10));
  m.relations.push_back(relation("{Q, e^-R Sbar_free e^R} = 0", {"Q", "Sbar_flat_measure"},
                                 [Q, Sbar_flat] { return anticommutator(Q, Sbar_flat); }, Expect::Violated));
  m.extras.push_back({"Q_direct", Qd});
  m.extras.push_back({"S_direct", Sd});
  m.recipe = {"free_complex(2)", "similarity R = g psi_a psibar_a", "Qbar, Sbar = measure adjoints, mu = e^-2g"};

  if (!drop.empty()) {
    std::vector<int> idx;
    for (const auto& d : drop) {
      auto it = std::find(m.coords.begin(), m.coords.end(), d);
      if (it == m.coords.end()) throw std::invalid_argument("hkt_conformal: unknown coordinate " + d);
      idx.push_back(static_cast<int>(it - m.coords.begin()));
    }
    const SampleSpec check = unit_box(m.coords.size());
    Q = reduce_cyclic(Q, idx, &check);
    Qbar = reduce_cyclic(Qbar, idx, &check);
    Sop = reduce_cyclic(Sop, idx, &check);
    Sbar = reduce_cyclic(Sbar, idx, &check);
    m.coords = Q.coords();
    m.relations.clear();
    m.extras.clear();
    m.measure = reduce_field(m.measure, 4, idx);
    std::string r = "reduce";
    for (const auto& d : drop) r += " " + d;
    m.recipe.push_back(r);
    m.name += "_reduced";
  }
  finish_n2(m, Q, Qbar);
  m.supercharges.push_back({{"S", Sop}, {"Sbar", Sbar}});
  m.hamiltonian = half(anticommutator(Qbar, Q));
  m.algebra = Algebra::N4;
  m.formulas["Q"] = "sqrt2 f psi_a (pi_a + i (d_a f / f) psi_c psibar_c), f = e^g";
  m.formulas["S"] = "sqrt2 f eps_ab psi_a (pibar_b + i (dbar_b f / f) psi_c psibar_c)";
  m.formulas["g"] = print(g, complex_coords(2));
  m.formulas["measure"] = "e^(-2g)";
  m.samples = unit_box(m.coords.size());
  m.replay = [g, drop] { return hkt_conformal(g, drop); };
  return m;
}

Model okt_flat() {
  Model m;
  m.name = "okt_flat";
  m.coords = real_coords(8);
  m.rep = hermitian_fermions(8);
  const int n = m.rep.dim();
  DiffOp Q(m.coords, n);
  for (int A = 0; A < 8; ++A) add_p(Q, A, K(m.rep.psi[A]));
  m.hermitian.push_back({"Q", Q});
  for (int a = 0; a < 7; ++a) {
    const Mat G = gamma7_matrix(a);
    DiffOp Sa(m.coords, n);
    for (int A = 0; A < 8; ++A) {
      Mat c = Mat::Zero(n, n);
      for (int B = 0; B < 8; ++B) c += G(A, B) * m.rep.psi[B];
      add_p(Sa, A, K(c));
    }
    m.hermitian.push_back({"S" + std::to_string(a + 1), Sa});
  }
  m.hamiltonian = laplacian_half(m.coords, n);
  m.algebra = Algebra::N8;
  m.formulas["Q"] = "p_A psi_A";
  m.formulas["S^a"] = "Gamma^a_AB p_A psi_B";
  m.formulas["H"] = "p^2 / 2";
  m.recipe = {"hermitian_fermions(8)", "Q = p.psi, S^a = Gamma^a_AB p_A psi_B"};
  m.samples = unit_box(8);
  m.samples.n_points = 5;
  m.geometry_checks = [](const SampleSpec&, Expect) {
    double lowest = 1e300;
    std::string where;
    for (int a = 0; a < 7; ++a)
      for (int b = a + 1; b < 7; ++b)
        for (int c = b + 1; c < 7; ++c) {
          double r = best_quaternion_residual(gamma7_matrix(a), gamma7_matrix(b), gamma7_matrix(c));
          if (r < lowest) {
            lowest = r;
            where = std::to_string(a + 1) + "," + std::to_string(b + 1) + "," + std::to_string(c + 1);
          }
        }
    Residual r;
    r.max_abs = lowest;
    CheckReport rep = make_report("no Gamma triple is quaternionic", {"Gamma^a"}, r, Expect::Violated);
    rep.note = "closest triple " + where;
    return std::vector<CheckReport>{rep};
  };
  m.replay = [] { return okt_flat(); };
  return m;
}

Model instanton(double rho) {
  if (!(rho > 0)) throw std::invalid_argument("instanton: rho must be positive");
  Model m;
  m.name = "instanton";
  m.coords = real_coords(4);
  m.rep = complex_fermions(2, 2);
  const int n = m.rep.dim();
  const auto& ps = m.rep.psi;
  const auto& pb = m.rep.psibar;
  Mat t[3];
  for (int a = 0; a < 3; ++a) t[a] = m.rep.color(0.5 * pauli(a + 1));
  Expr r2(rho * rho);
  for (int mu = 0; mu < 4; ++mu) r2 = r2 + var(mu) * var(mu);
  // A_mu = 2 eta^a_{mu nu} x_nu t^a / (x^2 + rho^2)
  std::vector<Field> A;
  for (int mu = 0; mu < 4; ++mu) {
    std::vector<Field> parts;
    for (int a = 0; a < 3; ++a) {
      const Mat e = eta_matrix(a);
      Expr s(0.0);
      for (int nu = 0; nu < 4; ++nu)
        if (e(mu, nu) != 0.0) s = s + e(mu, nu).real() * var(nu);
      if (!s.is_zero()) parts.push_back(sc(2.0 * s / r2, t[a]));
    }
    A.push_back(sum_fields(parts, n));
  }
  auto charge = [&](const std::vector<Mat>& X) {
    DiffOp op(m.coords, n);
    for (int mu = 0; mu < 4; ++mu) {
      add_p(op, mu, K(X[mu]));
      add_0(op, K(X[mu]) * A[mu], -1.0);
    }
    return op;
  };
  for (int al = 0; al < 2; ++al) {
    std::vector<Mat> X, Y;
    for (int mu = 0; mu < 4; ++mu) {
      const Mat s = sigma_euclid(mu);
      Mat x = Mat::Zero(n, n), y = Mat::Zero(n, n);
      for (int be = 0; be < 2; ++be) {
        x += s(al, be) * pb[be];
        y += std::conj(s(al, be)) * ps[be];
      }
      X.push_back(x);
      Y.push_back(y);
    }
    const std::string k = std::to_string(al + 1);
    m.supercharges.push_back({{"Q" + k, charge(X)}, {"Qbar" + k, charge(Y)}});
  }
  const DiffOp& Q1 = m.supercharges[0].first.op;
  m.hamiltonian = half(anticommutator(m.supercharges[0].second.op, Q1));
  // L^a = 2 t^a - i eta^a_{mu nu} (x_mu d_nu + 1/4 psi sigma_mu^dagger sigma_nu psibar)
  for (int a = 0; a < 3; ++a) {
    const Mat e = eta_matrix(a);
    DiffOp L(m.coords, n);
    Mat c0 = 2.0 * t[a];
    for (int mu = 0; mu < 4; ++mu)
      for (int nu = 0; nu < 4; ++nu) {
        if (e(mu, nu) == 0.0) continue;
        L.add_term(MultiIndex::unit(nu), sc(var(mu), Mat::Identity(n, n)), -I1 * e(mu, nu));
        const Mat ss = sigma_euclid(mu).adjoint() * sigma_euclid(nu);
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c) c0 += -0.25 * I1 * e(mu, nu) * ss(b, c) * ps[b] * pb[c];
      }
    add_0(L, K(c0));
    m.constraints.push_back({"L" + std::to_string(a + 1), L});
  }
  for (int a = 0; a < 3; ++a) {
    const DiffOp La = m.constraints[a].op;
    for (int al = 0; al < 2; ++al) {
      const DiffOp Qa = m.supercharges[al].first.op;
      m.relations.push_back(relation("[L" + std::to_string(a + 1) + ", Q" + std::to_string(al + 1) + "] = 0",
                                     {m.constraints[a].name, m.supercharges[al].first.name},
                                     [La, Qa] { return commutator(La, Qa); }));
    }
    const DiffOp H = m.hamiltonian;
    m.relations.push_back(relation("[L" + std::to_string(a + 1) + ", H] = 0", {m.constraints[a].name, "H"},
                                   [La, H] { return commutator(La, H); }));
  }
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      const int c = 3 - a - b;
      const DiffOp La = m.constraints[a].op, Lb = m.constraints[b].op, Lc = m.constraints[c].op;
      const double eps = levi_civita(a, b, c);
      m.relations.push_back(relation("[L" + std::to_string(a + 1) + ", L" + std::to_string(b + 1) + "] = 2i eps L" +
                                         std::to_string(c + 1),
                                     {"L" + std::to_string(a + 1), "L" + std::to_string(b + 1)},
                                     [La, Lb, Lc, eps] { return commutator(La, Lb) - (2.0 * I1 * eps) * Lc; }));
    }
  for (int al = 0; al < 2; ++al) {
    const DiffOp Q = m.supercharges[al].first.op, Qb = m.supercharges[al].second.op;
    m.relations.push_back(equal(m.supercharges[al].second.name, Qb, "naive_dagger(" + m.supercharges[al].first.name + ")",
                                naive_dagger(Q)));
  }
  m.algebra = Algebra::N4;
  m.formulas["Q_alpha"] = "(sigma_mu psibar)_alpha (p_mu - A_mu)";
  m.formulas["Qbar^alpha"] = "(psi sigma_mu^dagger)^alpha (p_mu - A_mu)";
  m.formulas["A_mu"] = "2 eta^a_{mu nu} x_nu t^a / (x^2 + rho^2)";
  m.recipe = {"complex_fermions(2) x color 2", "BPST potential rho = " + std::to_string(rho)};
  m.samples = unit_box(4);
  m.replay = [rho] { return instanton(rho); };
  return m;
}

namespace {

constexpr int sym3_index(int a, int j) { return 2 * a + j; }
const Coords kSym3Coords{"A11", "A12", "A21", "A22", "A31", "A32"};

}  // namespace

Model gauge_sym3() {
  Model m;
  m.name = "gauge_sym3";
  m.coords = kSym3Coords;
  m.rep = complex_fermions(3);
  const int n = m.rep.dim();
  const auto& ps = m.rep.psi;
  const auto& pb = m.rep.psibar;
  const Mat one = Mat::Identity(n, n);
  auto A = [](int a, int j) { return var(sym3_index(a, j)); };
  auto Am = [&](int a) { return A(a, 0) - I1 * A(a, 1); };
  auto Ap = [&](int a) { return A(a, 0) + I1 * A(a, 1); };
  // B^a = eps^abc A^b_1 A^c_2
  std::vector<Expr> B(3, Expr(0.0));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        if (double e = levi_civita(a, b, c); e != 0) B[a] = B[a] + e * A(b, 0) * A(c, 1);

  DiffOp Q(m.coords, n);
  for (int a = 0; a < 3; ++a) {
    add_p(Q, sym3_index(a, 0), K(ps[a]));
    add_p(Q, sym3_index(a, 1), K(ps[a]), -I1);
    add_0(Q, sc(B[a], pb[a]), I1);
  }
  const DiffOp Qbar = naive_dagger(Q);
  finish_n2(m, Q, Qbar);
  m.hamiltonian = half(anticommutator(Qbar, Q));

  for (int a = 0; a < 3; ++a) {
    DiffOp G(m.coords, n);
    Mat f = Mat::Zero(n, n);
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const double e = levi_civita(a, b, c);
        if (e == 0) continue;
        for (int j = 0; j < 2; ++j) add_p(G, sym3_index(c, j), sc(A(b, j), one), e);
        f += -I1 * e * ps[b] * pb[c];
      }
    add_0(G, K(f));
    m.constraints.push_back({"G" + std::to_string(a + 1), G});
  }

  // 1/2 Pi^2 + 1/4 [(AA)^2 - A^a_j A^a_k A^b_j A^b_k] + i/2 eps^abc [psibar^a psibar^b A^c_+ + psi^a psi^b A^c_-]
  DiffOp Hf = laplacian_half(m.coords, n);
  Expr AA(0.0), quart(0.0);
  for (int a = 0; a < 3; ++a)
    for (int j = 0; j < 2; ++j) AA = AA + A(a, j) * A(a, j);
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) {
      Expr dot(0.0);
      for (int a = 0; a < 3; ++a) dot = dot + A(a, j) * A(a, k);
      quart = quart + dot * dot;
    }
  add_0(Hf, sc(0.25 * (AA * AA - quart), one));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const double e = levi_civita(a, b, c);
        if (e == 0) continue;
        add_0(Hf, sc(Ap(c), pb[a] * pb[b]), 0.5 * I1 * e);
        add_0(Hf, sc(Am(c), ps[a] * ps[b]), 0.5 * I1 * e);
      }
  m.extras.push_back({"H_formula", Hf});

  std::vector<DiffOp> G;
  for (const auto& c : m.constraints) G.push_back(c.op);
  const DiffOp H = m.hamiltonian;
  {
    DiffOp AG(m.coords, n);
    for (int a = 0; a < 3; ++a) AG = AG + compose(mult(m.coords, sc(Am(a), one)), G[a]);
    m.relations.push_back(relation("Q^2 = A^a_- G^a", {"Q", "G"}, [Q, AG] { return compose(Q, Q) - AG; }));
  }
  m.relations.push_back(equal("H", H, "H_formula", Hf));
  for (int a = 0; a < 3; ++a) {
    const DiffOp Ga = G[a];
    m.relations.push_back(relation("[G" + std::to_string(a + 1) + ", H] = 0", {"G" + std::to_string(a + 1), "H"},
                                   [Ga, H] { return commutator(Ga, H); }));
    const DiffOp inv = mult(m.coords, sc(AA, one));
    m.relations.push_back(relation("[G" + std::to_string(a + 1) + ", A.A] = 0", {"G" + std::to_string(a + 1)},
                                   [Ga, inv] { return commutator(Ga, inv); }));
  }
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      const int c = 3 - a - b;
      const double e = levi_civita(a, b, c);
      const DiffOp Ga = G[a], Gb = G[b], Gc = G[c];
      m.relations.push_back(relation("[G" + std::to_string(a + 1) + ", G" + std::to_string(b + 1) + "] = i eps G" +
                                         std::to_string(c + 1),
                                     {"G" + std::to_string(a + 1), "G" + std::to_string(b + 1)},
                                     [Ga, Gb, Gc, e] { return commutator(Ga, Gb) - (I1 * e) * Gc; }));
    }
  m.algebra = Algebra::Gauge;
  m.formulas["Q"] = "Pi^a_- psi^a + i B^a psibar^a";
  m.formulas["B^a"] = "eps^abc A^b_1 A^c_2";
  m.formulas["G^a"] = "eps^abc (A^b_j Pi^c_j - i psi^b psibar^c)";
  m.recipe = {"complex_fermions(3)", "Q = Pi_- psi + i B psibar"};
  m.samples = unit_box(6);
  m.replay = [] { return gauge_sym3(); };
  return m;
}

Model gauge_sym3_resolved(double g0) {
  if (!(g0 > 0)) throw std::invalid_argument("gauge_sym3_resolved: g0 must be positive");
  Model m;
  m.name = "gauge_sym3_resolved";
  m.coords = {"a", "b", "alpha"};
  m.rep = complex_fermions(3);
  const int n = m.rep.dim();
  const auto& ps = m.rep.psi;
  const auto& pb = m.rep.psibar;
  Mat J[3];
  for (int a = 0; a < 3; ++a) {
    J[a] = Mat::Zero(n, n);
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) J[a] += I1 * levi_civita(a, b, c) * ps[b] * pb[c];
  }
  const Expr a = var(0), b = var(1), al = var(2);
  const Expr den = a * a - b * b;
  const Expr em = exp(-I1 * al), ep = exp(I1 * al);
  const Expr G0(g0);

  DiffOp Q(m.coords, n);
  add_p(Q, 0, sc(G0 * em, ps[0]));
  add_p(Q, 2, sc(G0 * em * a / den, ps[0]), -I1);
  add_0(Q, sc(G0 * em * b / den, ps[0] * J[2]), -I1);
  add_p(Q, 1, sc(G0 * em, ps[1]), -I1);
  add_p(Q, 2, sc(G0 * em * b / den, ps[1]));
  add_0(Q, sc(G0 * em * a / den, ps[1] * J[2]));
  add_0(Q, sc(G0 * em / a, ps[2] * J[1]), -1.0);
  add_0(Q, sc(G0 * em / b, ps[2] * J[0]), -I1);
  add_0(Q, sc(a * b / G0, pb[2]), I1);

  DiffOp Qb(m.coords, n);
  add_p(Qb, 0, sc(G0 * ep, pb[0]));
  add_p(Qb, 2, sc(G0 * ep * a / den, pb[0]), I1);
  add_0(Qb, sc(G0 * ep * b / den, pb[0] * J[2]), I1);
  add_p(Qb, 1, sc(G0 * ep, pb[1]), I1);
  add_p(Qb, 2, sc(G0 * ep * b / den, pb[1]));
  add_0(Qb, sc(G0 * ep * a / den, pb[1] * J[2]));
  add_0(Qb, sc(G0 * ep / a, pb[2] * J[1]), -1.0);
  add_0(Qb, sc(G0 * ep / b, pb[2] * J[0]), I1);
  add_0(Qb, sc(a * b / G0, ps[2]), -I1);

  finish_n2(m, Q, Qb);
  m.hamiltonian = half(anticommutator(Qb, Q));
  const DiffOp H = m.hamiltonian;
  const DiffOp pal = DiffOp::momentum(m.coords, n, 2);
  // the i a b psibar^3 term carries no phase, so p_alpha alone is not conserved;
  // p_alpha + F/2 gives every term of Q the same charge
  const DiffOp Jrot = pal + mult(m.coords, Mat(0.5 * fermion_number(m.rep)));
  m.constraints.push_back({"J_alpha", Jrot});
  m.relations.push_back(relation("[p_alpha, H] = 0", {"p_alpha", "H"}, [pal, H] { return commutator(pal, H); },
                                 Expect::Exploratory));
  m.relations.push_back(relation("[p_alpha + F/2, H] = 0", {"J_alpha", "H"}, [Jrot, H] { return commutator(Jrot, H); }));
  m.relations.push_back(relation("[p_alpha + F/2, Q] = -Q/2", {"J_alpha", "Q"},
                                 [Jrot, Q] { return commutator(Jrot, Q) + 0.5 * Q; }));
  m.algebra = Algebra::Exploratory;
  m.formulas["Q"] =
      "e^(-i alpha) g0 [psi^1 (p_a - i (a p_alpha + b J^3)/(a^2 - b^2)) + psi^2 (-i p_b + (b p_alpha + a J^3)/(a^2 - b^2))"
      " - psi^3 (J^2/a + i J^1/b)] + (i a b / g0) psibar^3";
  m.formulas["J^a"] = "i eps^abc psi^b psibar^c";
  m.recipe = {"complex_fermions(3)", "resolved supercharges on (a, b, alpha), g0 = " + std::to_string(g0)};
  m.samples.box = {{0.2, 2.0}, {0.2, 2.0}, {0.0, 2 * kPi}};
  for (const char* e : {"a - b", "a + b", "a", "b"})
    m.samples.exclusions.push_back({Exclusion::Kind::Nonzero, parse(e, m.coords), 0.2, std::string(e) + " != 0"});
  m.replay = [g0] { return gauge_sym3_resolved(g0); };
  return m;
}

Model wz_modes(const std::vector<std::array<int, 3>>& modes) {
  if (modes.empty()) throw std::invalid_argument("wz_modes: at least one mode");
  if (modes.size() > 4) throw std::invalid_argument("wz_modes: at most 4 modes (fermion Fock cap)");
  Model m;
  m.name = "wz_modes";
  const int M = static_cast<int>(modes.size());
  for (int k = 1; k <= M; ++k) {
    m.coords.push_back("f1_" + std::to_string(k));
    m.coords.push_back("f2_" + std::to_string(k));
  }
  m.rep = complex_fermions(2 * M);
  const int n = m.rep.dim();
  const auto& ps = m.rep.psi;
  const auto& pb = m.rep.psibar;
  const Mat one = Mat::Identity(n, n);
  auto psi = [&](int al, int k) -> const Mat& { return ps[2 * k + al]; };
  auto psib = [&](int al, int k) -> const Mat& { return pb[2 * k + al]; };

  std::vector<DiffOp> Qa(2, DiffOp(m.coords, n)), Pj(3, DiffOp(m.coords, n));
  DiffOp Hf(m.coords, n), Qcal(m.coords, n), Qcal0(m.coords, n);
  std::vector<DiffOp> Hn, Qn;
  Expr W(0.0);
  for (int k = 0; k < M; ++k) {
    const auto& nv = modes[static_cast<std::size_t>(k)];
    const int c1 = 2 * k, c2 = 2 * k + 1;
    const Expr f1 = var(c1), f2 = var(c2);
    const double n2 = double(nv[0] * nv[0] + nv[1] * nv[1] + nv[2] * nv[2]), rn = std::sqrt(n2);
    Mat N = Mat::Zero(2, 2);
    for (int j = 0; j < 3; ++j) N += double(nv[j]) * pauli(j + 1);
    // Q_alpha = sqrt2 [Pi psi_alpha - 2 pi i n_j (sigma_j)_ab psi_b phibar], Pi conjugate to phi
    for (int al = 0; al < 2; ++al) {
      add_p(Qa[al], c1, K(psi(al, k)));
      add_p(Qa[al], c2, K(psi(al, k)), -I1);
      Mat x = Mat::Zero(n, n);
      for (int be = 0; be < 2; ++be) x += N(al, be) * psi(be, k);
      if (n2 > 0) add_0(Qa[al], sc(f1 - I1 * f2, x), -2.0 * kPi * I1);
    }
    // H_n = Pibar Pi + (2 pi n)^2 phibar phi - 2 pi n_j psibar sigma_j psi
    DiffOp h(m.coords, n);
    add_dd(h, c1, c1, Field::identity(n), -0.5);
    add_dd(h, c2, c2, Field::identity(n), -0.5);
    Mat fN = Mat::Zero(n, n), fn = Mat::Zero(n, n);
    for (int al = 0; al < 2; ++al) {
      fn += 0.5 * (psi(al, k) * psib(al, k) - psib(al, k) * psi(al, k));
      for (int be = 0; be < 2; ++be) fN += N(al, be) * psib(al, k) * psi(be, k);
    }
    if (n2 > 0) {
      add_0(h, sc(f1 * f1 + f2 * f2, one), 2.0 * kPi * kPi * n2);
      add_0(h, K(fN), -2.0 * kPi);
    }
    Hf = Hf + h;
    Hn.push_back(h);
    // P_j = 2 pi n_j [(f1 P2 - f2 P1) + 1/2 [psi_alpha, psibar_alpha]]
    for (int j = 0; j < 3; ++j) {
      if (nv[j] == 0) continue;
      const double w = 2.0 * kPi * nv[j];
      add_p(Pj[j], c2, sc(f1, one), w);
      add_p(Pj[j], c1, sc(f2, one), -w);
      add_0(Pj[j], K(fn), w);
    }
    // chi^1 <-> eigenvalue -|n|, chi^2 <-> +|n|; first nonzero component of each eigenvector real positive
    Mat v = Mat::Identity(2, 2);
    if (n2 > 0) {
      Eigen::SelfAdjointEigenSolver<Mat> es(N);
      v = es.eigenvectors();
      for (int col = 0; col < 2; ++col) {
        int i0 = std::abs(v(0, col)) > 1e-12 ? 0 : 1;
        v.col(col) *= std::conj(v(i0, col)) / std::abs(v(i0, col));
      }
    }
    Mat chi[2];
    for (int col = 0; col < 2; ++col) {
      chi[col] = Mat::Zero(n, n);
      for (int be = 0; be < 2; ++be) chi[col] += std::conj(v(be, col)) * psi(be, k);
    }
    DiffOp q(m.coords, n);
    add_p(q, c1, K(chi[0]));
    add_p(q, c2, K(chi[1]));
    add_p(Qcal0, c1, K(chi[0]));
    add_p(Qcal0, c2, K(chi[1]));
    if (n2 > 0) {
      add_0(q, sc(f1, chi[0]), 2.0 * kPi * I1 * rn);
      add_0(q, sc(f2, chi[1]), -2.0 * kPi * I1 * rn);
      W = W + kPi * rn * (f1 * f1 - f2 * f2);
    }
    Qcal = Qcal + q;
    Qn.push_back(q);
  }
  for (int al = 0; al < 2; ++al)
    m.supercharges.push_back({{"Q" + std::to_string(al + 1), Qa[al]}, {"Qbar" + std::to_string(al + 1), naive_dagger(Qa[al])}});
  m.hamiltonian = cplx(0.25) * (anticommutator(Qa[0], m.op("Qbar1")) + anticommutator(Qa[1], m.op("Qbar2")));
  for (int j = 0; j < 3; ++j) m.extras.push_back({"P" + std::to_string(j + 1), Pj[j]});
  m.extras.push_back({"H_formula", Hf});
  m.extras.push_back({"Qcal", Qcal});
  m.extras.push_back({"Qcalbar", naive_dagger(Qcal)});
  m.extras.push_back({"Qcal0", Qcal0});
  for (int k = 0; k < M; ++k) {
    m.extras.push_back({"Qcal_" + std::to_string(k + 1), Qn[k]});
    m.extras.push_back({"H_" + std::to_string(k + 1), Hn[k]});
  }

  m.relations.push_back(equal("H", m.hamiltonian, "H_formula", Hf));
  for (int al = 0; al < 2; ++al)
    for (int be = 0; be < 2; ++be) {
      const DiffOp Q = Qa[al], Qb = m.op("Qbar" + std::to_string(be + 1));
      std::vector<DiffOp> P = Pj;
      std::vector<cplx> s(3);
      for (int j = 0; j < 3; ++j) s[j] = pauli(j + 1)(al, be);
      const cplx d = al == be ? 1.0 : 0.0;
      const std::string name = "{Q" + std::to_string(al + 1) + ", Qbar" + std::to_string(be + 1) + "} = 2(delta H + sigma_j P_j)";
      m.relations.push_back(relation(name, {"Q" + std::to_string(al + 1), "Qbar" + std::to_string(be + 1), "P_j"},
                                     [Q, Qb, Hf, P, s, d] {
                                       DiffOp r = anticommutator(Q, Qb) - (2.0 * d) * Hf;
                                       for (int j = 0; j < 3; ++j) r = r - (2.0 * s[j]) * P[j];
                                       return r;
                                     }));
      if (be >= al) {
        const DiffOp Q2 = Qa[be];
        m.relations.push_back(relation("{Q" + std::to_string(al + 1) + ", Q" + std::to_string(be + 1) + "} = 0",
                                       {"Q" + std::to_string(al + 1), "Q" + std::to_string(be + 1)},
                                       [Q, Q2] { return anticommutator(Q, Q2); }));
      }
    }
  for (int j = 0; j < 3; ++j) {
    const DiffOp P = Pj[j];
    const DiffOp Q = Qa[0];
    m.relations.push_back(relation("[P" + std::to_string(j + 1) + ", Q1] = 0", {"P" + std::to_string(j + 1), "Q1"},
                                   [P, Q] { return commutator(P, Q); }));
  }
  for (int k = 0; k < M; ++k) {
    const DiffOp q = Qn[k], h = Hn[k];
    m.relations.push_back(relation("{Qcal_" + std::to_string(k + 1) + ", Qcalbar_" + std::to_string(k + 1) + "} = 2 H_" +
                                       std::to_string(k + 1),
                                   {"Qcal_" + std::to_string(k + 1)},
                                   [q, h] { return anticommutator(q, naive_dagger(q)) - 2.0 * h; }));
  }
  const DiffOp sim = similarity(Qcal0, S(W));
  m.extras.push_back({"Qcal_similarity", sim});
  m.relations.push_back(equal("Qcal", Qcal, "e^W Qcal0 e^-W", sim, 1e-10));
  m.relations.push_back(relation("Qcal^2 = 0", {"Qcal"}, [Qcal] { return compose(Qcal, Qcal); }));

  m.algebra = Algebra::Central;
  m.formulas["Q_alpha"] = "sqrt2 sum_n [Pi_n psi_an - 2 pi i n_j (sigma_j)_ab psi_bn phibar_n]";
  m.formulas["H_n"] = "Pibar Pi + (2 pi n)^2 phibar phi - 2 pi n_j psibar sigma_j psi";
  m.formulas["Qcal_n"] = "chi^1 (P^1 + 2 i pi f^1 |n|) + chi^2 (P^2 - 2 i pi f^2 |n|)";
  m.formulas["W"] = print(W, m.coords);
  m.recipe = {"complex_fermions(" + std::to_string(2 * M) + ")", "mode supercharges", "Qcal = similarity(Qcal0, W)"};
  m.samples = unit_box(m.coords.size());
  m.replay = [modes] { return wz_modes(modes); };
  return m;
}

Model torsion_rotate(const Model& base, const Field& B, TorsionKind kind) {
  if (base.rep.kind != FermionRep::Kind::Complex) throw std::invalid_argument("torsion_rotate: complex fermions required");
  if (base.supercharges.empty()) throw std::invalid_argument("torsion_rotate: model has no supercharge");
  if (B.rows() != base.rep.modes || B.cols() != base.rep.modes)
    throw ShapeError("torsion_rotate: B must be modes x modes");
  Model m;
  m.name = base.name + (kind == TorsionKind::Holomorphic ? "+torsion" : "+antiholomorphic");
  m.coords = base.coords;
  m.rep = base.rep;
  m.measure = base.measure;
  const DiffOp Q = apply_torsion(base.op("Q"), m.rep, B, kind);
  const DiffOp Qbar = adjoint_with_measure(Q, m.measure);
  finish_n2(m, Q, Qbar);
  m.hamiltonian = half(anticommutator(Qbar, Q));
  m.formulas = base.formulas;
  m.formulas["R"] = kind == TorsionKind::Holomorphic ? "B_AB psi_A psi_B" : "B_AB psibar_A psibar_B";
  m.recipe = base.recipe;
  m.recipe.push_back(kind == TorsionKind::Holomorphic ? "similarity B psi psi" : "similarity B psibar psibar");
  m.recipe.push_back("Qbar = measure adjoint");
  m.samples = base.samples;
  m.replay = [base, B, kind] { return torsion_rotate(base.replay(), B, kind); };
  return m;
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> c{
      {"witten", "W: expression in x", Algebra::N2, "Witten model, Q = psi (p + i W')"},
      {"free_complex", "d: complex dimension", Algebra::N4, "flat complex model, Q = sqrt2 psi_a pi_a (N=4 for even d)"},
      {"free_real", "D: real dimension", Algebra::N2, "flat real model, Q = p_A psi_A"},
      {"dolbeault", "d, omega (d x d), optional W", Algebra::N2, "Dolbeault complex by similarity with omega psi psibar"},
      {"de_rham", "D, omega (D x D symmetric), optional W, torsion", Algebra::N2, "de Rham complex, spin-connection form"},
      {"quasicomplex", "D, omega (Hermitian, x only)", Algebra::N2, "quasicomplex model and the reduction rhombus"},
      {"kahler", "geometry, I", Algebra::N4, "Kahler N=4 model with F+, F-"},
      {"hyperkahler", "geometry, triple", Algebra::N8, "hyper-Kahler N=8 model"},
      {"gibbons_hawking", "centers, weights, eps", Algebra::N8, "hyper-Kahler model on a Gibbons-Hawking metric"},
      {"hkt_conformal", "g: expression, optional drop", Algebra::N4, "conformally flat HKT model"},
      {"okt_flat", "none", Algebra::N8, "flat OKT model with seven Gamma matrices"},
      {"instanton", "rho", Algebra::N4, "N=4 model in a BPST instanton background"},
      {"gauge_sym3", "none", Algebra::Gauge, "SU(2) SYM in 2+1 dimensions, zero modes"},
      {"gauge_sym3_resolved", "g0", Algebra::Exploratory, "resolved supercharges on (a, b, alpha)"},
      {"wz_modes", "modes: list of integer 3-vectors", Algebra::Central, "Wess-Zumino field theory on a 3-torus, truncated"},
      {"torsion_rotate", "model, B, kind", Algebra::N2, "torsion twist of an N=2 model"},
  };
  return c;
}

}  // namespace sqm
