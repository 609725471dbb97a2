#include "sqm/printer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <tuple>
#include <sstream>

namespace sqm {

namespace {

// ---- expression helpers ----------------------------------------------------

std::string key(const Expr& e) { return print(e, {}); }

Expr scaled(cplx c, const Expr& e) {
  if (c == 1.0) return e;
  if (c == -1.0) return e.node().op == ExprOp::Neg ? Expr(e.node().a) : -e;
  if (c == 0.0 || e.is_zero()) return Expr(0.0);
  if (e.is_const()) return Expr(c * e.node().value);
  const auto& n = e.node();
  if (n.op == ExprOp::Mul && n.a->op == ExprOp::Const) return Expr(c * n.a->value) * Expr(n.b);
  if (n.op == ExprOp::Neg) return scaled(-c, Expr(n.a));
  return Expr(c) * e;
}

Expr normal(const Expr& e);
std::pair<cplx, Expr> product(const Expr& e);

Expr times(const Expr& a, const Expr& b) {
  if (a.is_const()) return scaled(a.node().value, b);
  if (b.is_const()) return scaled(b.node().value, a);
  if (a.node().op == ExprOp::Neg) return -times(Expr(a.node().a), b);
  if (b.node().op == ExprOp::Neg) return -times(a, Expr(b.node().a));
  if (a.node().op == ExprOp::Mul && a.node().a->op == ExprOp::Const)
    return scaled(a.node().a->value, times(Expr(a.node().b), b));
  if (b.node().op == ExprOp::Mul && b.node().a->op == ExprOp::Const)
    return scaled(b.node().a->value, times(a, Expr(b.node().b)));
  if (a.node().op == ExprOp::Exp && b.node().op == ExprOp::Exp) return exp(normal(Expr(a.node().a) + Expr(b.node().a)));
  if (key(a) == key(b)) return Expr::pow(a, 2);
  return a * b;
}

bool looks_negative(cplx c) { return (c.imag() == 0 && c.real() < 0) || (c.real() == 0 && c.imag() < 0); }

// products flattened: constant, powers of distinct factors, one exponential
struct Factors {
  cplx coef = 1.0;
  std::vector<std::tuple<std::string, Expr, long, long>> f;  // key, base, p/q
  Expr exparg{0.0};

  void power(const Expr& base, long p, long q) {
    std::string k = key(base);
    for (auto& [kk, b, pp, qq] : f)
      if (kk == k) {
        long np = pp * q + p * qq, nq = qq * q, g = std::gcd(np, nq);
        pp = g ? np / g : 0, qq = g ? nq / g : 1;
        return;
      }
    f.push_back({k, base, p, q});
  }
  void collect(const Expr& e, int s) {
    const auto& n = e.node();
    switch (n.op) {
      case ExprOp::Const: coef *= s > 0 ? n.value : 1.0 / n.value; return;
      case ExprOp::Neg: coef = -coef, collect(Expr(n.a), s); return;
      case ExprOp::Mul: collect(Expr(n.a), s), collect(Expr(n.b), s); return;
      case ExprOp::Div: collect(Expr(n.a), s), collect(Expr(n.b), -s); return;
      case ExprOp::Exp: exparg = s > 0 ? exparg + Expr(n.a) : exparg - Expr(n.a); return;
      case ExprOp::Pow: power(normal(Expr(n.a)), s * n.p, n.q); return;
      default: {
        Expr b = normal(e);
        if (b.is_const()) coef *= s > 0 ? b.node().value : 1.0 / b.node().value;
        else if (b.node().op == ExprOp::Mul || b.node().op == ExprOp::Div || b.node().op == ExprOp::Neg) collect(b, s);
        else power(b, s, 1);
      }
    }
  }
};

std::pair<cplx, Expr> product(const Expr& e) {
  Factors F;
  F.collect(e, 1);
  Expr num(1.0), den(1.0);
  for (const auto& [k, b, p, q] : F.f) {
    if (p == 0) continue;
    if (p > 0) num = num * Expr::pow(b, p, q);
    else den = den * Expr::pow(b, -p, q);
  }
  Expr a = normal(F.exparg);
  if (a.is_const()) F.coef *= std::exp(a.node().value);
  else num = num * exp(a);
  return {F.coef, den.is_one() ? num : num / den};
}

// sums flattened, like terms (same printed form) combined
void flatten(const Expr& e, cplx c, std::vector<std::pair<cplx, Expr>>& out) {
  const auto& n = e.node();
  switch (n.op) {
    case ExprOp::Add: flatten(Expr(n.a), c, out), flatten(Expr(n.b), c, out); return;
    case ExprOp::Sub: flatten(Expr(n.a), c, out), flatten(Expr(n.b), -c, out); return;
    case ExprOp::Neg: flatten(Expr(n.a), -c, out); return;
    case ExprOp::Const: out.push_back({c * n.value, Expr(1.0)}); return;
    case ExprOp::Mul:
    case ExprOp::Div:
    case ExprOp::Exp:
    case ExprOp::Pow: {
      auto [k, t] = product(e);
      if (t.is_one() || t.node().op == ExprOp::Add || t.node().op == ExprOp::Sub || t.node().op == ExprOp::Neg) {
        if (!t.is_one() && !(t.node().op == ExprOp::Add || t.node().op == ExprOp::Sub || t.node().op == ExprOp::Neg)) break;
        flatten(t, c * k, out);
        return;
      }
      out.push_back({c * k, t});
      return;
    }
    default: break;
  }
  out.push_back({c, e});
}

Expr normal(const Expr& e) {
  std::vector<std::pair<cplx, Expr>> parts;
  flatten(e, 1.0, parts);
  std::vector<std::pair<cplx, Expr>> grouped;
  std::map<std::string, std::size_t> at;
  for (const auto& [c, x] : parts) {
    auto [it, fresh] = at.try_emplace(x.is_one() ? std::string() : key(x), grouped.size());
    if (fresh) grouped.push_back({c, x});
    else grouped[it->second].first += c;
  }
  // constant last
  std::stable_partition(grouped.begin(), grouped.end(), [](const auto& g) { return !g.second.is_one(); });
  Expr r(0.0);
  for (const auto& [c, x] : grouped) {
    if (std::abs(c) < 1e-14) continue;
    if (r.is_zero()) r = scaled(c, x);
    else if (looks_negative(c)) r = r - scaled(-c, x);
    else r = r + scaled(c, x);
  }
  return r;
}

Expr rebuild(const Expr& e, const std::function<Expr(const ExprNode&)>& leaf) {
  const auto& n = e.node();
  auto k = [&](const ExprPtr& p) { return rebuild(Expr(p), leaf); };
  switch (n.op) {
    case ExprOp::Const:
    case ExprOp::Var: return leaf(n);
    case ExprOp::Neg: return -k(n.a);
    case ExprOp::Add: return k(n.a) + k(n.b);
    case ExprOp::Sub: return k(n.a) - k(n.b);
    case ExprOp::Mul: return times(k(n.a), k(n.b));
    case ExprOp::Div: return k(n.a) / k(n.b);
    case ExprOp::Pow: return Expr::pow(k(n.a), n.p, n.q);
    default: return Expr::unary(n.op, k(n.a));
  }
}

// coordinates are real, so conjugation only touches constants
Expr conj(const Expr& e) {
  return rebuild(e, [](const ExprNode& n) { return n.op == ExprOp::Const ? Expr(std::conj(n.value)) : Expr::var(n.var); });
}

// ---- linear decomposition of fields: sum_k e_k(x) M_k ------------------------

using Lin = std::vector<std::pair<Expr, Mat>>;
constexpr std::size_t kMaxTerms = 4096;

Lin merged(const Lin& in) {
  std::map<std::string, std::size_t> at;
  Lin out;
  for (const auto& [e, m] : in) {
    if (e.is_zero() || m.isZero(0)) continue;
    // constants fold into the matrix
    if (e.is_const()) {
      auto [it, fresh] = at.try_emplace(std::string(), out.size());
      if (fresh) out.push_back({Expr(1.0), e.node().value * m});
      else out[it->second].second += e.node().value * m;
      continue;
    }
    auto [it, fresh] = at.try_emplace(key(e), out.size());
    if (fresh) out.push_back({e, m});
    else out[it->second].second += m;
  }
  return out;
}

Expr collapse(const Lin& l) {
  Expr s(0.0);
  for (const auto& [e, m] : l) s = s + scaled(m(0, 0), e);
  return normal(s);
}

class Decomposer {
 public:
  explicit Decomposer(int ncoords) : n_(ncoords) {}

  std::optional<Lin> operator()(const FieldNode& n) {
    auto it = memo_.find(&n);
    if (it != memo_.end()) return it->second;
    std::optional<Lin> r = compute(n);
    if (r) r = merged(*r);
    if (r && r->size() > kMaxTerms) r.reset();
    memo_[&n] = r;
    return r;
  }

 private:
  // exp(e M) = sum_k exp(lambda_k e) P_k for diagonalizable M
  static std::optional<Lin> spectral_exp(const Expr& e, const Mat& M) {
    Eigen::ComplexEigenSolver<Mat> es(M);
    const Mat V = es.eigenvectors();
    const auto lam = es.eigenvalues();
    Eigen::FullPivLU<Mat> lu(V);
    if (!lu.isInvertible()) return {};
    const Mat W = lu.inverse();
    std::vector<std::pair<cplx, Mat>> groups;
    for (int k = 0; k < lam.size(); ++k) {
      Mat P = V.col(k) * W.row(k);
      bool placed = false;
      for (auto& [l, Q] : groups)
        if (std::abs(l - lam(k)) < 1e-9) Q += P, placed = true;
      if (!placed) groups.push_back({lam(k), P});
    }
    Lin l;
    Mat check = Mat::Zero(M.rows(), M.cols());
    for (auto& [lk, P] : groups) {
      // snap eigenvalues and projector entries that are integers up to roundoff
      cplx r{std::round(lk.real()), std::round(lk.imag())};
      if (std::abs(r - lk) < 1e-9) lk = r;
      for (int i = 0; i < P.size(); ++i)
        if (std::abs(P(i)) < 1e-13) P(i) = 0;
      check += lk * P;
      l.push_back({exp(normal(scaled(lk, e))), P});
    }
    if ((check - M).cwiseAbs().maxCoeff() > 1e-9 * (1 + M.cwiseAbs().maxCoeff())) return {};
    return l;
  }

  std::optional<Lin> compute(const FieldNode& n) {
    if (n.zero) return Lin{};
    if (n.mask == 0 && n.op != FieldOp::Grid) {
      FieldPtr p(std::shared_ptr<const FieldNode>{}, &n);
      return Lin{{Expr(1.0), value(Field(p), std::vector<double>(static_cast<std::size_t>(n_), 0.0))}};
    }
    auto kid = [&](std::size_t i) { return (*this)(*n.kids[i]); };
    switch (n.op) {
      case FieldOp::Const: return Lin{{Expr(1.0), n.matrix}};
      case FieldOp::Grid: {
        Lin l;
        for (int r = 0; r < n.rows; ++r)
          for (int c = 0; c < n.cols; ++c) {
            Mat e = Mat::Zero(n.rows, n.cols);
            e(r, c) = 1.0;
            l.push_back({n.grid[static_cast<std::size_t>(r * n.cols + c)], e});
          }
        return l;
      }
      case FieldOp::Entry: {
        auto a = kid(0);
        if (!a) return {};
        Lin l;
        for (const auto& [e, m] : *a) l.push_back({e, Mat::Constant(1, 1, m(n.r, n.c))});
        return l;
      }
      case FieldOp::Transpose:
      case FieldOp::Adjoint: {
        auto a = kid(0);
        if (!a) return {};
        Lin l;
        for (const auto& [e, m] : *a) {
          if (n.op == FieldOp::Transpose) l.push_back({e, m.transpose()});
          else l.push_back({conj(e), m.adjoint()});
        }
        return l;
      }
      case FieldOp::Assemble: {
        Lin l;
        for (int r = 0; r < n.rows; ++r)
          for (int c = 0; c < n.cols; ++c) {
            auto a = kid(static_cast<std::size_t>(r * n.cols + c));
            if (!a) return {};
            Mat e = Mat::Zero(n.rows, n.cols);
            e(r, c) = 1.0;
            for (const auto& [x, m] : *a) l.push_back({x, m(0, 0) * e});
          }
        return l;
      }
      case FieldOp::Sum: {
        Lin l;
        for (std::size_t j = 0; j < n.kids.size(); ++j) {
          auto a = kid(j);
          if (!a) return {};
          for (const auto& [e, m] : *a) l.push_back({e, n.weights[j] * m});
        }
        return l;
      }
      case FieldOp::Product:
      case FieldOp::ScalarMul: {
        auto a = kid(0), b = kid(1);
        if (!a || !b || a->size() * b->size() > kMaxTerms) return {};
        Lin l;
        for (const auto& [ea, ma] : *a)
          for (const auto& [eb, mb] : *b) {
            Mat m = ma.size() == 1 ? Mat(ma(0, 0) * mb) : mb.size() == 1 ? Mat(mb(0, 0) * ma) : Mat(ma * mb);
            l.push_back({times(ea, eb), m});
          }
        return l;
      }
      case FieldOp::Contract: {
        auto a = kid(0);
        if (!a) return {};
        Lin l;
        const int ac = n.kids[0]->cols;
        for (const auto& [e, m] : *a) {
          Mat s = Mat::Zero(n.rows, n.cols);
          for (int x = 0; x < m.rows(); ++x)
            for (int y = 0; y < m.cols(); ++y)
              if (m(x, y) != 0.0) s += m(x, y) * n.basis[static_cast<std::size_t>(x * ac + y)];
          l.push_back({e, s});
        }
        return l;
      }
      case FieldOp::Trace: {
        auto a = kid(0);
        if (!a) return {};
        Lin l;
        for (const auto& [e, m] : *a) l.push_back({e, Mat::Constant(1, 1, m.trace())});
        return l;
      }
      case FieldOp::ScalarFn: {
        auto a = kid(0);
        if (!a) return {};
        Expr x = collapse(*a);
        Expr y = n.fn == ExprOp::Pow ? Expr::pow(x, n.p, n.q) : Expr::unary(n.fn, x);
        return Lin{{y, Mat::Ones(1, 1)}};
      }
      case FieldOp::Deriv: {
        auto a = kid(0);
        if (!a) return {};
        Lin l;
        for (const auto& [e, m] : *a) {
          Expr d = e;
          for (int v = 0; v < kMaxCoords; ++v)
            for (int t = 0; t < n.alpha[v]; ++t) d = derivative(d, v);
          l.push_back({d, m});
        }
        return l;
      }
      case FieldOp::Restrict: {
        const Restriction& rs = *n.restriction;
        auto a = kid(0);
        if (!a) return {};
        Lin l;
        for (const auto& [e, m] : *a) {
          Expr s = rebuild(e, [&](const ExprNode& x) {
            if (x.op == ExprOp::Const) return Expr(x.value);
            int o = rs.to_new[static_cast<std::size_t>(x.var)];
            return o >= 0 ? Expr::var(o) : Expr(rs.fixed[static_cast<std::size_t>(x.var)]);
          });
          l.push_back({s, m});
        }
        return l;
      }
      case FieldOp::Exp:
        if (n.kids[0]->rows > 1) {
          auto a = kid(0);
          if (!a || a->size() != 1) return {};
          return spectral_exp((*a)[0].first, (*a)[0].second);
        }
        [[fallthrough]];
      case FieldOp::Inverse:
      case FieldOp::Det: {
        // only scalars have closed forms here
        if (n.kids[0]->rows != 1 || n.kids[0]->cols != 1) return {};
        auto a = kid(0);
        if (!a) return {};
        Expr x = collapse(*a);
        Expr y = n.op == FieldOp::Exp ? exp(x) : n.op == FieldOp::Inverse ? Expr(1.0) / x : x;
        return Lin{{y, Mat::Ones(1, 1)}};
      }
    }
    return {};
  }

  int n_;
  std::map<const FieldNode*, std::optional<Lin>> memo_;
};

// ---- fermion monomials -------------------------------------------------------

struct ColorPart {
  std::string name;
  Mat t;
};

std::vector<ColorPart> color_basis(int cd) {
  std::vector<ColorPart> b;
  if (cd == 1) return {{"", Mat::Ones(1, 1)}};
  b.push_back({"", Mat::Identity(cd, cd)});
  if (cd == 2) {
    for (int j = 1; j <= 3; ++j) b.push_back({"t" + std::to_string(j), 0.5 * pauli(j)});
    return b;
  }
  for (int r = 0; r < cd; ++r)
    for (int c = 0; c < cd; ++c) {
      if (r == c && r == 0) continue;
      Mat e = Mat::Zero(cd, cd);
      e(r, c) = 1.0;
      if (r == c) e(0, 0) = -1.0;  // traceless diagonal pieces against the identity
      b.push_back({"E" + std::to_string(r + 1) + std::to_string(c + 1), e});
    }
  return b;
}

// coefficients of c = sum_k x_k T_k; the basis is linearly independent
std::vector<cplx> color_coefficients(const Mat& c, const std::vector<ColorPart>& basis) {
  const int cd = static_cast<int>(c.rows());
  Mat A(cd * cd, static_cast<int>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k)
    A.col(static_cast<int>(k)) = Eigen::Map<const Eigen::VectorXcd>(basis[k].t.data(), cd * cd);
  Eigen::VectorXcd rhs = Eigen::Map<const Eigen::VectorXcd>(c.data(), cd * cd);
  Eigen::VectorXcd x = A.colPivHouseholderQr().solve(rhs);
  return {x.data(), x.data() + x.size()};
}

void emit(std::vector<Monomial>& out, const std::string& fermions, const Mat& c, const std::vector<ColorPart>& basis,
          double cutoff) {
  auto x = color_coefficients(c, basis);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (std::abs(x[k]) <= cutoff) continue;
    std::string name = fermions;
    if (!basis[k].name.empty()) name = name == "1" ? basis[k].name : name + " " + basis[k].name;
    out.push_back({name, x[k]});
  }
}

std::vector<Monomial> complex_monomials(const Mat& M, const FermionRep& rep, double cutoff) {
  const int d = rep.modes, cd = rep.color_dim;
  const unsigned N = 1u << d;
  auto state = [&](unsigned mask) {
    unsigned s = 0;
    for (int a = 0; a < d; ++a)
      if (mask >> a & 1u) s |= 1u << (d - 1 - a);
    return s;
  };
  // <bra| psi_A psibar_B |ket>, all indices as mode masks
  auto element = [&](unsigned A, unsigned B, unsigned bra, unsigned ket) -> double {
    unsigned s = state(ket);
    double sign = 1;
    for (int b = d - 1; b >= 0; --b) {
      if (!(B >> b & 1u)) continue;
      unsigned bit = 1u << (d - 1 - b);
      if (!(s & bit)) return 0;
      unsigned t = s & ~bit;
      sign *= rep.psibar[static_cast<std::size_t>(b)](t * cd, s * cd).real();
      s = t;
    }
    for (int a = d - 1; a >= 0; --a) {
      if (!(A >> a & 1u)) continue;
      unsigned bit = 1u << (d - 1 - a);
      if (s & bit) return 0;
      unsigned t = s | bit;
      sign *= rep.psi[static_cast<std::size_t>(a)](t * cd, s * cd).real();
      s = t;
    }
    return s == state(bra) ? sign : 0;
  };
  std::vector<Mat> c(static_cast<std::size_t>(N) * N);
  std::vector<std::pair<unsigned, unsigned>> order;
  for (unsigned A = 0; A < N; ++A)
    for (unsigned B = 0; B < N; ++B) order.push_back({A, B});
  std::stable_sort(order.begin(), order.end(), [](auto x, auto y) {
    return std::popcount(x.first & x.second) < std::popcount(y.first & y.second);
  });
  for (auto [A, B] : order) {
    Mat rhs = M.block(state(A) * cd, state(B) * cd, cd, cd);
    const unsigned O = A & B;
    for (unsigned E = O; E; E = (E - 1) & O) {
      const Mat& prev = c[(A & ~E) * N + (B & ~E)];
      if (prev.size()) rhs -= element(A & ~E, B & ~E, A, B) * prev;
    }
    c[A * N + B] = rhs / element(A, B, A, B);
  }
  auto basis = color_basis(cd);
  std::vector<Monomial> out;
  // low degree first, psi before psibar
  std::vector<std::pair<unsigned, unsigned>> shown(order.begin(), order.end());
  std::stable_sort(shown.begin(), shown.end(), [](auto x, auto y) {
    int dx = std::popcount(x.first) + std::popcount(x.second), dy = std::popcount(y.first) + std::popcount(y.second);
    return dx != dy ? dx < dy : x < y;
  });
  for (auto [A, B] : shown) {
    const Mat& k = c[A * N + B];
    if (k.cwiseAbs().maxCoeff() <= cutoff) continue;
    std::string name;
    for (int a = 0; a < d; ++a)
      if (A >> a & 1u) name += (name.empty() ? "" : " ") + std::string("psi") + std::to_string(a + 1);
    for (int b = 0; b < d; ++b)
      if (B >> b & 1u) name += (name.empty() ? "" : " ") + std::string("psibar") + std::to_string(b + 1);
    emit(out, name.empty() ? "1" : name, k, basis, cutoff);
  }
  return out;
}

std::vector<Monomial> hermitian_monomials(const Mat& M, const FermionRep& rep, double cutoff) {
  const int D = rep.modes, cd = rep.color_dim;
  auto basis = color_basis(cd);
  std::vector<unsigned> subsets;
  for (unsigned S = 0; S < (1u << D); ++S) subsets.push_back(S);
  std::stable_sort(subsets.begin(), subsets.end(), [](unsigned x, unsigned y) {
    return std::popcount(x) != std::popcount(y) ? std::popcount(x) < std::popcount(y) : x < y;
  });
  std::vector<Monomial> out;
  for (unsigned S : subsets) {
    Mat P = rep.identity();
    std::string name;
    for (int a = 0; a < D; ++a)
      if (S >> a & 1u) {
        P = P * rep.psi[static_cast<std::size_t>(a)];
        name += (name.empty() ? "" : " ") + std::string("psi") + std::to_string(a + 1);
      }
    // partial trace against P over the fock factor leaves a color matrix
    const double norm = (P.adjoint() * P).trace().real() / cd;
    Mat PM = P.adjoint() * M;
    Mat col = Mat::Zero(cd, cd);
    for (int f = 0; f < rep.fock_dim; ++f) col += PM.block(f * cd, f * cd, cd, cd);
    col /= norm;
    if (col.cwiseAbs().maxCoeff() <= cutoff) continue;
    emit(out, name.empty() ? "1" : name, col, basis, cutoff);
  }
  return out;
}

std::string momenta(const MultiIndex& a, const std::vector<std::string>& coords) {
  std::string s;
  for (int m = 0; m < static_cast<int>(coords.size()); ++m) {
    if (!a[m]) continue;
    if (!s.empty()) s += " ";
    s += "p_" + coords[static_cast<std::size_t>(m)];
    if (a[m] > 1) s += "^" + std::to_string(a[m]);
  }
  return s;
}

}  // namespace

Expr derivative(const Expr& e, int v) {
  const auto& n = e.node();
  if (!(n.mask >> v & 1u)) return Expr(0.0);
  auto d = [&](const ExprPtr& p) { return derivative(Expr(p), v); };
  Expr a = n.a ? Expr(n.a) : Expr(0.0), b = n.b ? Expr(n.b) : Expr(0.0);
  switch (n.op) {
    case ExprOp::Const: return Expr(0.0);
    case ExprOp::Var: return Expr(n.var == v ? 1.0 : 0.0);
    case ExprOp::Neg: return -d(n.a);
    case ExprOp::Add: return d(n.a) + d(n.b);
    case ExprOp::Sub: return d(n.a) - d(n.b);
    case ExprOp::Mul: return times(d(n.a), b) + times(a, d(n.b));
    case ExprOp::Div: return d(n.a) / b - times(a, d(n.b)) / Expr::pow(b, 2);
    case ExprOp::Exp: return times(e, d(n.a));
    case ExprOp::Log: return d(n.a) / a;
    case ExprOp::Sqrt: return d(n.a) / scaled(2.0, e);
    case ExprOp::Sin: return times(cos(a), d(n.a));
    case ExprOp::Cos: return -times(sin(a), d(n.a));
    case ExprOp::Pow:
      return times(scaled(static_cast<double>(n.p) / static_cast<double>(n.q), Expr::pow(a, n.p - n.q, n.q)), d(n.a));
  }
  return Expr(0.0);
}

std::vector<Monomial> fermion_monomials(const Mat& m, const FermionRep& rep, double cutoff) {
  if (m.rows() != rep.dim() || m.cols() != rep.dim()) throw ShapeError("fermion_monomials: matrix does not match the rep");
  return rep.kind == FermionRep::Kind::Complex ? complex_monomials(m, rep, cutoff) : hermitian_monomials(m, rep, cutoff);
}

std::string pretty(const DiffOp& op, const FermionRep& rep, const std::optional<std::vector<double>>& point) {
  const auto& coords = op.coords();
  Decomposer dec(op.ncoords());
  // probe points for recognising zero and constant coefficients
  std::vector<std::vector<double>> probes;
  {
    std::vector<double> base = point ? *point : std::vector<double>(coords.size(), 0.3);
    for (int k = 0; k < 3; ++k) {
      auto q = base;
      for (std::size_t i = 0; i < q.size(); ++i) q[i] += 0.0137 * (k + 1) * static_cast<double>(i % 5 + 1);
      probes.push_back(q);
    }
  }

  struct Piece {
    MultiIndex alpha;
    std::string text;  // coefficient without sign; empty for 1
    bool negative = false;
    bool numeric = false;
    bool constant = true;
  };
  struct Group {
    int order;
    std::string mono;
    std::vector<Piece> pieces;
  };
  std::vector<Group> groups;
  bool any_numeric = false, any_opaque = false;

  auto place = [&](int order, const std::string& mono, Piece pc) {
    for (auto& g : groups)
      if (g.order == order && g.mono == mono) {
        g.pieces.push_back(std::move(pc));
        return;
      }
    groups.push_back({order, mono, {std::move(pc)}});
  };

  std::vector<std::pair<MultiIndex, Field>> terms(op.terms().begin(), op.terms().end());
  std::stable_sort(terms.begin(), terms.end(), [](const auto& x, const auto& y) { return x.first.order() > y.first.order(); });
  for (const auto& [alpha, F] : terms) {
    // d^alpha = i^|alpha| p^alpha
    const cplx ipow = std::pow(cplx(0, 1), alpha.order());
    auto l = dec(F.node());
    bool numeric = false;
    if (!l) {
      if (!point) {
        any_opaque = true;
        place(alpha.order(), "<coefficient>", {alpha, "", false, false, false});
        continue;
      }
      l = Lin{{Expr(1.0), value(F, *point)}};
      numeric = any_numeric = true;
    }
    std::vector<std::pair<std::string, Lin>> per_mono;
    for (const auto& [e, m] : *l)
      for (const auto& mono : fermion_monomials(m, rep)) {
        auto it = std::find_if(per_mono.begin(), per_mono.end(), [&](const auto& x) { return x.first == mono.name; });
        if (it == per_mono.end()) it = per_mono.insert(per_mono.end(), {mono.name, {}});
        it->second.push_back({e, Mat::Constant(1, 1, ipow * mono.coef)});
      }
    for (auto& [mono, sum] : per_mono) {
      Expr x = collapse(merged(sum));
      bool zero = true, constant = true;
      cplx v0 = 0;
      if (!x.is_const()) {
        for (std::size_t k = 0; k < probes.size(); ++k) {
          cplx v = evaluate(x, probes[k]);
          if (k == 0) v0 = v;
          if (std::abs(v) > 1e-12) zero = false;
          if (std::abs(v - v0) > 1e-12 * (1 + std::abs(v0))) constant = false;
        }
        if (constant && !zero) x = Expr(v0);
      } else {
        zero = std::abs(x.node().value) < 1e-13;
      }
      if (zero) continue;
      Piece pc{alpha, "", false, numeric, x.is_const()};
      if (x.is_const()) {
        cplx c = x.node().value;
        if (looks_negative(c)) pc.negative = true, c = -c;
        pc.text = std::abs(c - 1.0) < 1e-13 ? "" : short_number(c);
        if (pc.text.find(" + ") != std::string::npos || pc.text.find(" - ") != std::string::npos)
          pc.text = "(" + pc.text + ")";
      } else {
        const auto& nd = x.node();
        if (nd.op == ExprOp::Neg) pc.negative = true, x = Expr(nd.a);
        else if (nd.op == ExprOp::Mul && nd.a->op == ExprOp::Const && looks_negative(nd.a->value))
          pc.negative = true, x = scaled(-nd.a->value, Expr(nd.b));
        pc.text = print_short(x, coords);
        if (!(x.node().op == ExprOp::Var || x.node().op == ExprOp::Exp || x.node().op == ExprOp::Sin ||
              x.node().op == ExprOp::Cos || x.node().op == ExprOp::Log || x.node().op == ExprOp::Sqrt))
          pc.text = "(" + pc.text + ")";
      }
      place(alpha.order(), mono, pc);
    }
  }

  std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    if (a.order != b.order) return a.order > b.order;
    auto words = [](const std::string& m) { return std::count(m.begin(), m.end(), ' '); };
    if (words(a.mono) != words(b.mono)) return words(a.mono) < words(b.mono);
    return a.mono < b.mono;
  });
  auto join = [](std::initializer_list<std::string> ws) {
    std::string r;
    for (const auto& w : ws)
      if (!w.empty() && w != "1") r += (r.empty() ? "" : " ") + w;
    return r.empty() ? std::string("1") : r;
  };
  std::vector<std::pair<bool, std::string>> lines;  // (negative, body)
  for (auto& g : groups) {
    std::stable_sort(g.pieces.begin(), g.pieces.end(), [](const Piece& a, const Piece& b) { return a.alpha.e > b.alpha.e; });
    const bool constant_coefs = std::all_of(g.pieces.begin(), g.pieces.end(), [](const Piece& p) { return p.constant; });
    const bool numeric = std::any_of(g.pieces.begin(), g.pieces.end(), [](const Piece& p) { return p.numeric; });
    if (g.order > 0 && g.pieces.size() > 1 && constant_coefs) {
      // mono (c1 p1 + c2 p2 + ...)
      std::string inner;
      bool first = true;
      for (const auto& p : g.pieces) {
        std::string w = join({p.text, momenta(p.alpha, coords)});
        inner += first ? (p.negative ? "-" : "") + w : (p.negative ? " - " : " + ") + w;
        first = false;
      }
      lines.push_back({false, join({g.mono}) == "1" ? "(" + inner + ")" : g.mono + " (" + inner + ")"});
      if (numeric) lines.back().second += "  *";
      continue;
    }
    for (const auto& p : g.pieces) {
      std::string body = join({p.text, g.mono, momenta(p.alpha, coords)});
      if (p.numeric) body += "  *";
      lines.push_back({p.negative, body});
    }
  }

  std::ostringstream os;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& [neg, body] = lines[i];
    os << (i == 0 ? (neg ? "  - " : "    ") : (neg ? "  - " : "  + ")) << body << "\n";
  }
  if (lines.empty()) os << "    0\n";
  if (any_numeric) {
    os << "  (* coefficient values at";
    for (std::size_t i = 0; i < point->size(); ++i) os << " " << coords[i] << "=" << short_number((*point)[i]);
    os << ")\n";
  }
  if (any_opaque) os << "  (<coefficient> terms have no closed form)\n";
  return os.str();
}

}  // namespace sqm
