#include "sqm/diffop.hpp"

#include <algorithm>

#include "sqm/sampling.hpp"

namespace sqm {

namespace {

struct Accumulator {
  std::map<MultiIndex, std::pair<std::vector<Field>, std::vector<cplx>>> parts;

  void add(const MultiIndex& a, const Field& f, cplx w) {
    if (f.is_zero() || w == 0.0) return;
    if (a.order() > kMaxOperatorOrder)
      throw OrderOverflow("operator order " + std::to_string(a.order()) + " exceeds cap " +
                          std::to_string(kMaxOperatorOrder));
    auto& p = parts[a];
    p.first.push_back(f);
    p.second.push_back(w);
  }

  DiffOp build(std::vector<std::string> coords, int dim) const {
    DiffOp r(std::move(coords), dim);
    for (const auto& [a, p] : parts) r.add_term(a, linear_combination(p.first, p.second));
    return r;
  }
};

void require_same_space(const DiffOp& a, const DiffOp& b) {
  if (a.coords() != b.coords() || a.dim() != b.dim())
    throw ShapeError("operators live on different spaces");
}

// d^alpha o F expanded as sum_gamma binom(alpha, gamma) d^gamma(F) d^(alpha-gamma)
void leibniz(Accumulator& acc, const MultiIndex& alpha, const Field& left, const Field& F,
             const MultiIndex& tail, cplx w, int n) {
  for (const auto& g : sub_indices(alpha, n)) {
    Field dF = deriv(F, g);
    if (dF.is_zero()) continue;
    acc.add(alpha - g + tail, left * dF, w * multi_binomial(alpha, g));
  }
}

}  // namespace

DiffOp::DiffOp(std::vector<std::string> coords, int dim) : coords_(std::move(coords)), dim_(dim) {
  if (static_cast<int>(coords_.size()) > kMaxCoords) throw std::invalid_argument("too many coordinates");
}

DiffOp DiffOp::multiplication(std::vector<std::string> coords, const Field& f) {
  if (f.rows() != f.cols()) throw ShapeError("multiplication operator needs a square field");
  DiffOp r(std::move(coords), f.rows());
  r.add_term(MultiIndex{}, f);
  return r;
}

DiffOp DiffOp::partial(std::vector<std::string> coords, int dim, int m) {
  DiffOp r(std::move(coords), dim);
  if (m < 0 || m >= r.ncoords()) throw std::out_of_range("coordinate index");
  r.add_term(MultiIndex::unit(m), Field::identity(dim));
  return r;
}

DiffOp DiffOp::momentum(std::vector<std::string> coords, int dim, int m) {
  DiffOp r(std::move(coords), dim);
  if (m < 0 || m >= r.ncoords()) throw std::out_of_range("coordinate index");
  r.add_term(MultiIndex::unit(m), Field::identity(dim), cplx(0, -1));
  return r;
}

Field DiffOp::coefficient(const MultiIndex& a) const {
  auto it = terms_.find(a);
  return it == terms_.end() ? Field::zero(dim_, dim_) : it->second;
}

int DiffOp::order() const {
  int o = 0;
  for (const auto& [a, f] : terms_) o = std::max(o, a.order());
  return o;
}

void DiffOp::add_term(const MultiIndex& alpha, const Field& F, cplx c) {
  if (F.is_scalar() && dim_ != 1) {
    add_term(alpha, F * Field::identity(dim_), c);
    return;
  }
  if (F.rows() != dim_ || F.cols() != dim_) throw ShapeError("coefficient shape does not match module dimension");
  if (alpha.order() > kMaxOperatorOrder) throw OrderOverflow("operator order exceeds cap");
  for (int i = ncoords(); i < kMaxCoords; ++i)
    if (alpha[i]) throw std::out_of_range("derivative in an undeclared coordinate");
  if (F.is_zero() || c == 0.0) return;
  auto it = terms_.find(alpha);
  Field v = it == terms_.end() ? c * F : linear_combination({it->second, F}, {1.0, c});
  if (v.is_zero()) {
    if (it != terms_.end()) terms_.erase(it);
    return;
  }
  terms_[alpha] = v;
}

DiffOp DiffOp::left_multiply(const Field& F) const {
  DiffOp r(coords_, dim_);
  for (const auto& [a, c] : terms_) r.add_term(a, F * c);
  return r;
}

DiffOp operator+(const DiffOp& a, const DiffOp& b) {
  require_same_space(a, b);
  DiffOp r = a;
  for (const auto& [al, c] : b.terms()) r.add_term(al, c);
  return r;
}

DiffOp operator-(const DiffOp& a, const DiffOp& b) {
  require_same_space(a, b);
  DiffOp r = a;
  for (const auto& [al, c] : b.terms()) r.add_term(al, c, -1.0);
  return r;
}

DiffOp operator*(cplx s, const DiffOp& a) {
  DiffOp r(a.coords(), a.dim());
  for (const auto& [al, c] : a.terms()) r.add_term(al, c, s);
  return r;
}

DiffOp compose(const DiffOp& a, const DiffOp& b) {
  require_same_space(a, b);
  Accumulator acc;
  const int n = a.ncoords();
  for (const auto& [al, A] : a.terms())
    for (const auto& [be, B] : b.terms()) leibniz(acc, al, A, B, be, 1.0, n);
  return acc.build(a.coords(), a.dim());
}

DiffOp anticommutator(const DiffOp& a, const DiffOp& b) { return compose(a, b) + compose(b, a); }
DiffOp commutator(const DiffOp& a, const DiffOp& b) { return compose(a, b) - compose(b, a); }

DiffOp naive_dagger(const DiffOp& a) {
  Accumulator acc;
  const int n = a.ncoords();
  const Field one = Field::identity(a.dim());
  for (const auto& [al, C] : a.terms())
    leibniz(acc, al, one, adjoint(C), MultiIndex{}, al.order() % 2 ? -1.0 : 1.0, n);
  return acc.build(a.coords(), a.dim());
}

DiffOp adjoint_with_measure(const DiffOp& a, const Field& mu) {
  if (!mu.is_scalar()) throw ShapeError("measure must be a 1x1 field");
  DiffOp d = naive_dagger(a);
  if (mu.is_const()) return d;
  const Field inv = scalar_fn(ExprOp::Pow, mu, -1);
  // mu^-1 d^alpha o mu = sum_gamma binom * (d^gamma mu / mu) d^(alpha - gamma)
  Accumulator acc;
  const int n = a.ncoords();
  for (const auto& [al, C] : d.terms())
    for (const auto& g : sub_indices(al, n)) {
      Field dm = deriv(mu, g);
      if (dm.is_zero()) continue;
      Field ratio = g.order() == 0 ? Field::scalar(1.0) : inv * dm;
      acc.add(al - g, ratio * C, multi_binomial(al, g));
    }
  return acc.build(a.coords(), a.dim());
}

namespace {

// Covariant pieces of the conjugated derivative d_M + G_M as first-order operators.
std::vector<DiffOp> conjugated_partials(const DiffOp& a, const Field& R, Field& E, Field& Einv, bool& scalar) {
  const int n = a.ncoords(), dim = a.dim();
  std::vector<DiffOp> D;
  scalar = R.is_scalar() && dim != 1;
  if (scalar || dim == 1) {
    scalar = true;
    for (int m = 0; m < n; ++m) {
      DiffOp op = DiffOp::partial(a.coords(), dim, m);
      Field g = deriv(R, m);
      if (!g.is_zero()) op.add_term(MultiIndex{}, g, -1.0);
      D.push_back(op);
    }
    return D;
  }
  if (R.rows() != dim || R.cols() != dim) throw ShapeError("similarity: rotation does not match module");
  E = mat_exp(R);
  Einv = mat_exp(-R);
  for (int m = 0; m < n; ++m) {
    DiffOp op = DiffOp::partial(a.coords(), dim, m);
    Field g = deriv(Einv, m);
    if (!g.is_zero()) op.add_term(MultiIndex{}, E * g);
    D.push_back(op);
  }
  return D;
}

}  // namespace

DiffOp similarity(const DiffOp& a, const Field& R) {
  if (R.is_zero()) return a;
  Field E, Einv;
  bool scalar = false;
  std::vector<DiffOp> D = conjugated_partials(a, R, E, Einv, scalar);
  const int n = a.ncoords(), dim = a.dim();
  DiffOp out(a.coords(), dim);
  // products of conjugated partials, built on demand and shared
  std::map<MultiIndex, DiffOp> chains;
  chains[MultiIndex{}] = DiffOp::multiplication(a.coords(), Field::identity(dim));
  auto chain = [&](const MultiIndex& al, auto&& self) -> const DiffOp& {
    auto it = chains.find(al);
    if (it != chains.end()) return it->second;
    int m = 0;
    while (al[m] == 0) ++m;
    DiffOp rest = self(al - MultiIndex::unit(m), self);
    return chains[al] = compose(D[static_cast<std::size_t>(m)], rest);
  };
  for (const auto& [al, C] : a.terms()) {
    Field Cr = scalar ? C : E * C * Einv;
    out = out + chain(al, chain).left_multiply(Cr);
  }
  (void)n;
  return out;
}

DiffOp similarity_by_composition(const DiffOp& a, const Field& R) {
  const std::vector<std::string>& c = a.coords();
  if (R.is_scalar() && a.dim() != 1) {
    Field e = scalar_fn(ExprOp::Exp, R), ei = scalar_fn(ExprOp::Exp, -R);
    return compose(DiffOp::multiplication(c, e * Field::identity(a.dim())),
                   compose(a, DiffOp::multiplication(c, ei * Field::identity(a.dim()))));
  }
  return compose(DiffOp::multiplication(c, mat_exp(R)), compose(a, DiffOp::multiplication(c, mat_exp(-R))));
}

// ---------------------------------------------------------------------------

namespace {

std::shared_ptr<const Restriction> make_restriction(int n, const std::vector<int>& dropped,
                                                    const std::vector<double>& fixed_values) {
  auto r = std::make_shared<Restriction>();
  r->to_new.assign(static_cast<std::size_t>(n), 0);
  r->fixed.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<bool> drop(static_cast<std::size_t>(n), false);
  for (std::size_t i = 0; i < dropped.size(); ++i) {
    int d = dropped[i];
    if (d < 0 || d >= n) throw std::out_of_range("reduce: coordinate index");
    drop[static_cast<std::size_t>(d)] = true;
    if (i < fixed_values.size()) r->fixed[static_cast<std::size_t>(d)] = fixed_values[i];
  }
  int next = 0;
  for (int i = 0; i < n; ++i) r->to_new[static_cast<std::size_t>(i)] = drop[static_cast<std::size_t>(i)] ? -1 : next++;
  return r;
}

}  // namespace

Field reduce_field(const Field& f, int ncoords, const std::vector<int>& dropped, const std::vector<double>& fixed_values) {
  return restrict_field(f, make_restriction(ncoords, dropped, fixed_values));
}

DiffOp reduce_cyclic(const DiffOp& a, const std::vector<int>& dropped, const SampleSpec* check,
                     const std::vector<double>& fixed_values) {
  const int n = a.ncoords();
  auto r = make_restriction(n, dropped, fixed_values);
  std::uint32_t dmask = 0;
  for (int d : dropped) dmask |= 1u << d;

  std::vector<Field> suspicious;
  for (const auto& [al, C] : a.terms())
    if (C.mask() & dmask) suspicious.push_back(C);
  if (!suspicious.empty()) {
    if (!check)
      throw ReductionError("reduce_cyclic: coefficients may depend on dropped coordinates and no sample spec was given");
    // numerical check: first partials in dropped directions must vanish
    DiffOp probe(a.coords(), a.dim());
    for (const auto& C : suspicious)
      for (int d : dropped) probe.add_term(MultiIndex::unit(0), deriv(C, d));
    Residual res = residual(probe, sample_points(*check));
    if (res.max_abs > 1e-9 * (1 + res.scale)) {
      std::string where;
      for (double v : res.argmax_point) where += " " + std::to_string(v);
      throw ReductionError("reduce_cyclic: coefficient depends on a dropped coordinate (residual " +
                           std::to_string(res.max_abs) + " at" + where + ")");
    }
  }
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i)
    if (r->to_new[static_cast<std::size_t>(i)] >= 0) names.push_back(a.coords()[static_cast<std::size_t>(i)]);
  DiffOp out(names, a.dim());
  for (const auto& [al, C] : a.terms()) {
    if (al.support() & dmask) continue;
    MultiIndex nal;
    for (int i = 0; i < n; ++i)
      if (r->to_new[static_cast<std::size_t>(i)] >= 0) nal[r->to_new[static_cast<std::size_t>(i)]] = al[i];
    out.add_term(nal, restrict_field(C, r));
  }
  return out;
}

}  // namespace sqm
