#include "sqm/field.hpp"

#include <algorithm>

namespace sqm {

namespace {

std::shared_ptr<FieldNode> make_node(FieldOp op, int rows, int cols) {
  auto n = std::make_shared<FieldNode>();
  n->op = op;
  n->rows = rows;
  n->cols = cols;
  return n;
}

std::uint32_t kid_mask(const std::vector<FieldPtr>& kids) {
  std::uint32_t m = 0;
  for (const auto& k : kids) m |= k->mask;
  return m;
}

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

Field Field::constant(const Mat& m, std::string label) {
  auto n = make_node(FieldOp::Const, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  n->matrix = m;
  n->label = std::move(label);
  n->zero = (m.array() == cplx{}).all();
  n->identity = m.rows() == m.cols() && m == Mat::Identity(m.rows(), m.cols());
  return Field(FieldPtr(n));
}

Field Field::zero(int rows, int cols) { return constant(Mat::Zero(rows, cols)); }

Field Field::identity(int dim) { return constant(Mat::Identity(dim, dim)); }

Field Field::scalar(const Expr& e) {
  if (e.is_const()) return scalar(e.node().value);
  return grid(1, 1, {e});
}

Field Field::grid(int rows, int cols, std::vector<Expr> entries) {
  require(static_cast<int>(entries.size()) == rows * cols, "grid: entry count does not match shape");
  bool all_const = true;
  for (const auto& e : entries) all_const = all_const && e.is_const();
  if (all_const) {
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = entries[static_cast<std::size_t>(r * cols + c)].node().value;
    return constant(m);
  }
  auto n = make_node(FieldOp::Grid, rows, cols);
  for (const auto& e : entries) n->mask |= e.mask();
  n->grid = std::move(entries);
  return Field(FieldPtr(n));
}

Field linear_combination(const std::vector<Field>& terms, const std::vector<cplx>& weights) {
  require(terms.size() == weights.size() && !terms.empty(), "linear combination: bad arguments");
  const int rows = terms[0].rows(), cols = terms[0].cols();
  Mat acc = Mat::Zero(rows, cols);
  bool have_const = false;
  std::vector<FieldPtr> kids;
  std::vector<cplx> w;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require(terms[i].rows() == rows && terms[i].cols() == cols, "sum: shape mismatch");
    if (terms[i].is_zero() || weights[i] == 0.0) continue;
    if (terms[i].is_const()) {
      acc += weights[i] * terms[i].node().matrix;
      have_const = true;
      continue;
    }
    kids.push_back(terms[i].ptr());
    w.push_back(weights[i]);
  }
  if (have_const && !(acc.array() == cplx{}).all()) {
    kids.push_back(Field::constant(acc).ptr());
    w.push_back(1.0);
  }
  if (kids.empty()) return Field::zero(rows, cols);
  if (kids.size() == 1 && w[0] == 1.0) return Field(kids[0]);
  auto n = make_node(FieldOp::Sum, rows, cols);
  n->mask = kid_mask(kids);
  n->kids = std::move(kids);
  n->weights = std::move(w);
  return Field(FieldPtr(n));
}

Field operator+(const Field& a, const Field& b) { return linear_combination({a, b}, {1.0, 1.0}); }
Field operator-(const Field& a, const Field& b) { return linear_combination({a, b}, {1.0, -1.0}); }
Field operator*(cplx s, const Field& a) {
  if (s == 1.0) return a;
  return linear_combination({a}, {s});
}
Field Field::operator-() const { return linear_combination({*this}, {-1.0}); }

Field operator*(const Field& a, const Field& b) {
  if (a.is_scalar() && !b.is_scalar()) {
    if (a.is_zero() || b.is_zero()) return Field::zero(b.rows(), b.cols());
    if (a.is_const()) return a.node().matrix(0, 0) * b;
    auto n = make_node(FieldOp::ScalarMul, b.rows(), b.cols());
    n->kids = {a.ptr(), b.ptr()};
    n->mask = a.mask() | b.mask();
    return Field(FieldPtr(n));
  }
  if (b.is_scalar() && !a.is_scalar()) return b * a;
  require(a.cols() == b.rows(), "product: inner dimensions differ");
  if (a.is_zero() || b.is_zero()) return Field::zero(a.rows(), b.cols());
  if (a.is_identity()) return b;
  if (b.is_identity()) return a;
  // f 1 times X is just f X
  auto scalar_part = [](const Field& f) -> const FieldPtr* {
    const FieldNode& n = f.node();
    return n.op == FieldOp::ScalarMul && n.kids[1]->identity ? &n.kids[0] : nullptr;
  };
  if (auto s = scalar_part(a)) return Field(*s) * b;
  if (auto s = scalar_part(b)) return Field(*s) * a;
  if (a.is_const() && b.is_const()) return Field::constant(a.node().matrix * b.node().matrix);
  if (a.is_const() && a.is_scalar()) return a.node().matrix(0, 0) * b;
  if (b.is_const() && b.is_scalar()) return b.node().matrix(0, 0) * a;
  auto n = make_node(FieldOp::Product, a.rows(), b.cols());
  n->kids = {a.ptr(), b.ptr()};
  n->mask = a.mask() | b.mask();
  return Field(FieldPtr(n));
}

Field transpose(const Field& a) {
  if (a.is_const()) return Field::constant(a.node().matrix.transpose());
  if (a.node().op == FieldOp::Transpose) return Field(a.node().kids[0]);
  auto n = make_node(FieldOp::Transpose, a.cols(), a.rows());
  n->kids = {a.ptr()};
  n->mask = a.mask();
  return Field(FieldPtr(n));
}

Field adjoint(const Field& a) {
  if (a.is_const()) return Field::constant(a.node().matrix.adjoint());
  if (a.node().op == FieldOp::Adjoint) return Field(a.node().kids[0]);
  auto n = make_node(FieldOp::Adjoint, a.cols(), a.rows());
  n->kids = {a.ptr()};
  n->mask = a.mask();
  return Field(FieldPtr(n));
}

Field entry(const Field& a, int r, int c) {
  require(r >= 0 && r < a.rows() && c >= 0 && c < a.cols(), "entry: index out of range");
  if (a.is_const()) return Field::scalar(a.node().matrix(r, c));
  if (a.node().op == FieldOp::Grid) return Field::scalar(a.node().grid[static_cast<std::size_t>(r * a.cols() + c)]);
  if (a.is_scalar()) return a;
  auto n = make_node(FieldOp::Entry, 1, 1);
  n->kids = {a.ptr()};
  n->mask = a.mask();
  n->r = r;
  n->c = c;
  return Field(FieldPtr(n));
}

Field assemble(int rows, int cols, const std::vector<Field>& entries) {
  require(static_cast<int>(entries.size()) == rows * cols, "assemble: entry count does not match shape");
  bool all_const = true;
  for (const auto& e : entries) {
    require(e.is_scalar(), "assemble: entries must be 1x1");
    all_const = all_const && e.is_const();
  }
  if (all_const) {
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = entries[static_cast<std::size_t>(r * cols + c)].node().matrix(0, 0);
    return Field::constant(m);
  }
  auto n = make_node(FieldOp::Assemble, rows, cols);
  for (const auto& e : entries) n->kids.push_back(e.ptr());
  n->mask = kid_mask(n->kids);
  return Field(FieldPtr(n));
}

Field contract(const Field& a, const std::vector<Mat>& basis) {
  require(static_cast<int>(basis.size()) == a.rows() * a.cols() && !basis.empty(), "contract: basis size mismatch");
  const int rows = static_cast<int>(basis[0].rows()), cols = static_cast<int>(basis[0].cols());
  for (const auto& b : basis) require(b.rows() == rows && b.cols() == cols, "contract: basis shapes differ");
  if (a.is_const()) {
    Mat m = Mat::Zero(rows, cols);
    for (int r = 0; r < a.rows(); ++r)
      for (int c = 0; c < a.cols(); ++c) m += a.node().matrix(r, c) * basis[static_cast<std::size_t>(r * a.cols() + c)];
    return Field::constant(m);
  }
  auto n = make_node(FieldOp::Contract, rows, cols);
  n->kids = {a.ptr()};
  n->basis = basis;
  n->mask = a.mask();
  return Field(FieldPtr(n));
}

Field mat_exp(const Field& a) {
  require(a.rows() == a.cols(), "mat_exp: square field required");
  if (a.is_zero()) return Field::identity(a.rows());
  auto n = make_node(FieldOp::Exp, a.rows(), a.cols());
  n->kids = {a.ptr()};
  n->mask = a.mask();
  return Field(FieldPtr(n));
}

Field inverse(const Field& a) {
  require(a.rows() == a.cols(), "inverse: square field required");
  if (a.is_identity()) return a;
  auto n = make_node(FieldOp::Inverse, a.rows(), a.cols());
  n->kids = {a.ptr()};
  n->mask = a.mask();
  return Field(FieldPtr(n));
}

Field det(const Field& a) {
  require(a.rows() == a.cols(), "det: square field required");
  if (a.is_identity()) return Field::scalar(1.0);
  if (a.is_scalar()) return a;
  auto n = make_node(FieldOp::Det, 1, 1);
  n->kids = {a.ptr()};
  n->mask = a.mask();
  return Field(FieldPtr(n));
}

Field trace(const Field& a) {
  require(a.rows() == a.cols(), "trace: square field required");
  if (a.is_const()) return Field::scalar(a.node().matrix.trace());
  auto n = make_node(FieldOp::Trace, 1, 1);
  n->kids = {a.ptr()};
  n->mask = a.mask();
  return Field(FieldPtr(n));
}

Field scalar_fn(ExprOp fn, const Field& a, long p, long q) {
  require(a.is_scalar(), "scalar function: 1x1 field required");
  if (fn == ExprOp::Pow && p == q) return a;
  auto n = make_node(FieldOp::ScalarFn, 1, 1);
  n->kids = {a.ptr()};
  n->fn = fn;
  n->p = p;
  n->q = q;
  n->mask = a.mask();
  return Field(FieldPtr(n));
}

Field deriv(const Field& a, const MultiIndex& alpha) {
  if (alpha.order() == 0) return a;
  if (a.is_const() || (alpha.support() & ~a.mask()) != 0) return Field::zero(a.rows(), a.cols());
  if (a.node().op == FieldOp::Deriv) return deriv(Field(a.node().kids[0]), a.node().alpha + alpha);
  auto n = make_node(FieldOp::Deriv, a.rows(), a.cols());
  n->kids = {a.ptr()};
  n->alpha = alpha;
  n->mask = a.mask();
  return Field(FieldPtr(n));
}

Field restrict_field(const Field& a, std::shared_ptr<const Restriction> r) {
  std::uint32_t m = 0;
  for (std::size_t i = 0; i < r->to_new.size(); ++i)
    if ((a.mask() >> i) & 1u) {
      if (r->to_new[i] >= 0) m |= 1u << r->to_new[i];
    }
  if (a.is_const()) return a;
  auto n = make_node(FieldOp::Restrict, a.rows(), a.cols());
  n->kids = {a.ptr()};
  n->restriction = std::move(r);
  n->mask = m;
  return Field(FieldPtr(n));
}

// ---------------------------------------------------------------------------

FieldEvaluator::FieldEvaluator(std::vector<double> point) : x_(point), exprs_(std::move(point)) {}
FieldEvaluator::~FieldEvaluator() = default;

const MatJet* FieldEvaluator::cached(const FieldNode* n) const {
  auto it = done_.find(n);
  return it == done_.end() ? nullptr : &it->second;
}

FieldEvaluator& FieldEvaluator::sub(const Restriction& r) {
  auto& slot = subs_[r];
  if (!slot) {
    std::vector<double> y(r.to_new.size());
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = r.to_new[i] >= 0 ? x_.at(static_cast<std::size_t>(r.to_new[i])) : r.fixed[i];
    slot = std::make_unique<FieldEvaluator>(std::move(y));
  }
  return *slot;
}

void FieldEvaluator::plan(const std::vector<std::pair<Field, int>>& roots) {
  std::vector<std::pair<const FieldNode*, int>> raw;
  for (const auto& [f, k] : roots) {
    pins_.push_back(f.ptr());
    raw.emplace_back(f.ptr().get(), k);
  }
  run(raw);
}

const MatJet& FieldEvaluator::eval(const Field& f, int k) {
  auto it = done_.find(f.ptr().get());
  if (it == done_.end() || it->second.order() < k) {
    plan({{f, k}});
    it = done_.find(f.ptr().get());
  }
  return it->second;
}

void FieldEvaluator::run(const std::vector<std::pair<const FieldNode*, int>>& roots) {
  // post-order over the DAG, children first
  std::vector<const FieldNode*> order;
  std::unordered_map<const FieldNode*, int> demand;
  {
    std::vector<std::pair<const FieldNode*, std::size_t>> stack;
    std::unordered_map<const FieldNode*, bool> seen;
    for (const auto& [root, k] : roots) {
      (void)k;
      if (seen.count(root)) continue;
      seen[root] = true;
      stack.emplace_back(root, 0);
      while (!stack.empty()) {
        auto& [n, i] = stack.back();
        const bool descend = n->op != FieldOp::Restrict;
        if (descend && i < n->kids.size()) {
          const FieldNode* kid = n->kids[i++].get();
          if (!seen.count(kid)) {
            seen[kid] = true;
            stack.emplace_back(kid, 0);
          }
          continue;
        }
        order.push_back(n);
        stack.pop_back();
      }
    }
  }
  for (const auto& [root, k] : roots) demand[root] = std::max(demand[root], k);
  std::map<Restriction, std::vector<std::pair<const FieldNode*, int>>> sub_roots;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const FieldNode* n = *it;
    auto d = demand.find(n);
    if (d == demand.end()) continue;
    const int k = d->second;
    if (k > kMaxJetOrder)
      throw OrderOverflow("required jet order " + std::to_string(k) + " exceeds internal cap");
    if (auto c = done_.find(n); c != done_.end() && c->second.order() >= k) continue;
    if (n->op == FieldOp::Restrict) {
      sub_roots[*n->restriction].emplace_back(n->kids[0].get(), k);
      continue;
    }
    const int extra = n->op == FieldOp::Deriv ? n->alpha.order() : 0;
    for (const auto& kid : n->kids) {
      int& kd = demand[kid.get()];
      kd = std::max(kd, k + extra);
    }
  }
  for (auto& [r, list] : sub_roots) sub(r).run(list);
  for (const FieldNode* n : order) {
    auto d = demand.find(n);
    if (d == demand.end()) continue;
    if (auto c = done_.find(n); c != done_.end() && c->second.order() >= d->second) continue;
    done_[n] = compute(n, d->second);
  }
}

namespace {

void add_scaled(MatJet& out, const MatJet& a, cplx w) {
  for (int i = 0; i < out.size(); ++i)
    if (a.nonzero(i)) out.touch(i) += w * a.coef(i);
}

Series apply_fn(ExprOp fn, const Series& s, long p, long q) {
  switch (fn) {
    case ExprOp::Exp: return exp(s);
    case ExprOp::Log: return log(s);
    case ExprOp::Sqrt: return sqrt(s);
    case ExprOp::Sin: return sin(s);
    case ExprOp::Cos: return cos(s);
    case ExprOp::Pow: return pow_rational(s, p, q);
    default: throw std::invalid_argument("unsupported scalar function");
  }
}

}  // namespace

MatJet FieldEvaluator::compute(const FieldNode* n, int k) {
  const int nv = nvars();
  auto kid = [&](std::size_t i) -> const MatJet& { return done_.at(n->kids[i].get()); };
  switch (n->op) {
    case FieldOp::Const: {
      if (n->zero) return MatJet(nv, k, n->rows, n->cols);
      return MatJet::constant(nv, k, n->matrix);
    }
    case FieldOp::Grid: {
      MatJet r(nv, k, n->rows, n->cols);
      for (int a = 0; a < n->rows; ++a)
        for (int b = 0; b < n->cols; ++b) {
          const Expr& e = n->grid[static_cast<std::size_t>(a * n->cols + b)];
          if (e.is_zero()) continue;
          const Series& s = exprs_.eval(e, k);
          for (int i = 0; i < r.size(); ++i)
            if (s[i] != 0.0) r.touch(i)(a, b) = s[i];
        }
      return r;
    }
    case FieldOp::Entry: {
      MatJet r = MatJet::from_scalar(kid(0).entry(n->r, n->c));
      return r.truncated(k);
    }
    case FieldOp::Transpose: return kid(0).truncated(k).transpose();
    case FieldOp::Adjoint: return kid(0).truncated(k).adjoint();
    case FieldOp::Assemble: {
      MatJet r(nv, k, n->rows, n->cols);
      for (int a = 0; a < n->rows; ++a)
        for (int b = 0; b < n->cols; ++b) {
          const MatJet& e = done_.at(n->kids[static_cast<std::size_t>(a * n->cols + b)].get());
          for (int i = 0; i < r.size(); ++i)
            if (e.nonzero(i)) r.touch(i)(a, b) = e.coef(i)(0, 0);
        }
      return r;
    }
    case FieldOp::Sum: {
      MatJet r(nv, k, n->rows, n->cols);
      for (std::size_t j = 0; j < n->kids.size(); ++j) add_scaled(r, kid(j), n->weights[j]);
      return r;
    }
    case FieldOp::Product: return multiply(kid(0), kid(1), k);
    case FieldOp::ScalarMul: {
      MatJet r = kid(1).truncated(k);
      r.scale_by(kid(0).entry(0, 0).truncated(k));
      return r;
    }
    case FieldOp::Contract: {
      const MatJet& a = kid(0);
      MatJet r(nv, k, n->rows, n->cols);
      for (int i = 0; i < r.size(); ++i) {
        if (!a.nonzero(i)) continue;
        auto c = r.touch(i);
        for (int x = 0; x < a.rows(); ++x)
          for (int y = 0; y < a.cols(); ++y) {
            cplx w = a.coef(i)(x, y);
            if (w != 0.0) c += w * n->basis[static_cast<std::size_t>(x * a.cols() + y)];
          }
      }
      return r;
    }
    case FieldOp::Exp: return expm(kid(0).truncated(k));
    case FieldOp::Inverse: return inverse(kid(0).truncated(k));
    case FieldOp::Det: return MatJet::from_scalar(determinant(kid(0).truncated(k)));
    case FieldOp::Trace: return MatJet::from_scalar(trace(kid(0).truncated(k)));
    case FieldOp::ScalarFn:
      return MatJet::from_scalar(apply_fn(n->fn, kid(0).entry(0, 0).truncated(k), n->p, n->q));
    case FieldOp::Deriv: {
      MatJet r = kid(0);
      for (int m = 0; m < nv; ++m)
        for (int j = 0; j < n->alpha[m]; ++j) r = r.derivative(m);
      return r.truncated(k);
    }
    case FieldOp::Restrict: {
      const Restriction& rs = *n->restriction;
      FieldEvaluator& s = sub(rs);
      const MatJet& old = s.done_.at(n->kids[0].get());
      MatJet r(nv, k, n->rows, n->cols);
      const auto& tab = r.table();
      const auto& otab = old.table();
      for (int i = 0; i < r.size(); ++i) {
        const MultiIndex& b = tab.monomial(i);
        MultiIndex a;
        for (std::size_t o = 0; o < rs.to_new.size(); ++o)
          if (rs.to_new[o] >= 0) a[static_cast<int>(o)] = b[rs.to_new[o]];
        int j = otab.index_of(a);
        if (j >= 0 && old.nonzero(j)) r.touch(i) = old.coef(j);
      }
      return r;
    }
  }
  throw std::logic_error("unhandled field node");
}

// ---------------------------------------------------------------------------

std::vector<Jet> jet(const Field& f, const std::vector<double>& point, int order) {
  if (order < 0 || order > kDerivativeCap)
    throw OrderOverflow("requested derivative order " + std::to_string(order) + " exceeds cap " +
                        std::to_string(kDerivativeCap));
  FieldEvaluator ev(point);
  const MatJet& j = ev.eval(f, order);
  std::vector<Jet> out;
  const auto& tab = j.table();
  for (int r = 0; r < f.rows(); ++r)
    for (int c = 0; c < f.cols(); ++c) {
      Jet e;
      e.value = j.coef(0)(r, c);
      for (int i = 0; i < j.size(); ++i) {
        const MultiIndex& a = tab.monomial(i);
        e.partials[a] = (j.nonzero(i) ? j.coef(i)(r, c) : cplx{}) * multi_factorial(a);
      }
      out.push_back(std::move(e));
    }
  return out;
}

Mat value(const Field& f, const std::vector<double>& point) {
  FieldEvaluator ev(point);
  return ev.eval(f, 0).value();
}

}  // namespace sqm
