#include "sqm/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <unordered_map>

namespace sqm {

namespace {

std::uint64_t pack(const MultiIndex& a) {
  std::uint64_t k = 0;
  for (int i = 0; i < kMaxCoords; ++i) k |= static_cast<std::uint64_t>(a[i] & 0xF) << (4 * i);
  return k;
}

void compositions(int n, int d, int pos, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (pos == n - 1) {
    cur[pos] = static_cast<std::uint8_t>(d);
    out.push_back(cur);
    cur[pos] = 0;
    return;
  }
  for (int v = d; v >= 0; --v) {
    cur[pos] = static_cast<std::uint8_t>(v);
    compositions(n, d - v, pos + 1, cur, out);
  }
  cur[pos] = 0;
}

// out += a * b for column-major blocks; a is r x m, b is m x c.
inline void gemm_acc(cplx* out, const cplx* a, const cplx* b, int r, int m, int c) {
  auto* o = reinterpret_cast<double*>(out);
  const auto* A = reinterpret_cast<const double*>(a);
  const auto* B = reinterpret_cast<const double*>(b);
  for (int j = 0; j < c; ++j) {
    for (int l = 0; l < m; ++l) {
      const double br = B[2 * (l + m * j)], bi = B[2 * (l + m * j) + 1];
      if (br == 0.0 && bi == 0.0) continue;
      const double* acol = A + 2 * (r * l);
      double* ocol = o + 2 * (r * j);
      for (int i = 0; i < r; ++i) {
        const double ar = acol[2 * i], ai = acol[2 * i + 1];
        ocol[2 * i] += ar * br - ai * bi;
        ocol[2 * i + 1] += ar * bi + ai * br;
      }
    }
  }
}

}  // namespace

std::vector<MultiIndex> sub_indices(const MultiIndex& alpha, int n) {
  std::vector<MultiIndex> out{MultiIndex{}};
  for (int m = 0; m < n; ++m) {
    std::vector<MultiIndex> next;
    for (const auto& g : out)
      for (int v = 0; v <= alpha[m]; ++v) {
        MultiIndex h = g;
        h[m] = static_cast<std::uint8_t>(v);
        next.push_back(h);
      }
    out.swap(next);
  }
  return out;
}

double multi_binomial(const MultiIndex& alpha, const MultiIndex& gamma) {
  double r = 1;
  for (int i = 0; i < kMaxCoords; ++i) {
    int a = alpha[i], g = gamma[i];
    for (int j = 1; j <= g; ++j) r = r * (a - g + j) / j;
  }
  return r;
}

double multi_factorial(const MultiIndex& alpha) {
  double r = 1;
  for (int i = 0; i < kMaxCoords; ++i)
    for (int j = 2; j <= alpha[i]; ++j) r *= j;
  return r;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const MonomialTable> MonomialTable::get(int n, int k) {
  if (n < 0 || n > kMaxCoords) throw std::invalid_argument("jet: too many coordinates");
  if (k < 0 || k > kMaxJetOrder)
    throw OrderOverflow("jet order " + std::to_string(k) + " exceeds internal cap " +
                        std::to_string(kMaxJetOrder));
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const MonomialTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, k}];
  if (!slot) slot.reset(new MonomialTable(n, k));
  return slot;
}

MonomialTable::MonomialTable(int n, int k) : n_(n), k_(k) {
  MultiIndex cur;
  for (int d = 0; d <= k; ++d) {
    if (n == 0) {
      if (d == 0) monomials_.push_back(MultiIndex{});
    } else {
      compositions(n, d, 0, cur, monomials_);
    }
    prefix_.push_back(static_cast<int>(monomials_.size()));
  }
  std::unordered_map<std::uint64_t, int> index;
  index.reserve(monomials_.size() * 2);
  for (int i = 0; i < size(); ++i) index[pack(monomials_[static_cast<std::size_t>(i)])] = i;

  auto deg_begin = [&](int d) { return d == 0 ? 0 : prefix_[static_cast<std::size_t>(d - 1)]; };
  for (int d = 0; d <= k; ++d) {
    for (int i = 0; i < prefix_[static_cast<std::size_t>(d)]; ++i) {
      int di = monomials_[static_cast<std::size_t>(i)].order();
      int e = d - di;
      for (int j = deg_begin(e); j < prefix_[static_cast<std::size_t>(e)]; ++j) {
        MultiIndex s = monomials_[static_cast<std::size_t>(i)] + monomials_[static_cast<std::size_t>(j)];
        triples_.push_back({i, j, index.at(pack(s))});
      }
    }
    triple_prefix_.push_back(static_cast<int>(triples_.size()));
  }
  up_.assign(static_cast<std::size_t>(n), std::vector<int>(monomials_.size(), -1));
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < size(); ++i) {
      MultiIndex s = monomials_[static_cast<std::size_t>(i)];
      if (s.order() >= k) continue;
      s[m] = static_cast<std::uint8_t>(s[m] + 1);
      up_[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)] = index.at(pack(s));
    }
}

int MonomialTable::index_of(const MultiIndex& a) const {
  int d = a.order();
  if (d > k_) return -1;
  int lo = d == 0 ? 0 : prefix_[static_cast<std::size_t>(d - 1)];
  for (int i = lo; i < prefix_[static_cast<std::size_t>(d)]; ++i)
    if (monomials_[static_cast<std::size_t>(i)] == a) return i;
  return -1;
}

// ---------------------------------------------------------------------------

Series::Series(int n, int k) : n_(n), k_(k), table_(MonomialTable::get(n, k)) {
  c_.assign(static_cast<std::size_t>(table_->size()), cplx{});
}

Series Series::constant(int n, int k, cplx v) {
  Series s(n, k);
  s.c_[0] = v;
  return s;
}

Series Series::variable(int n, int k, int m, double x0) {
  Series s(n, k);
  s.c_[0] = x0;
  if (k >= 1) s.c_[static_cast<std::size_t>(s.table_->shift_up(m, 0))] = 1.0;
  return s;
}

cplx Series::partial(const MultiIndex& alpha) const {
  int i = table_->index_of(alpha);
  if (i < 0) throw OrderOverflow("derivative order exceeds jet order");
  return c_[static_cast<std::size_t>(i)] * multi_factorial(alpha);
}

Series Series::truncated(int k) const {
  if (k >= k_) return *this;
  Series s(n_, k);
  std::copy_n(c_.begin(), s.c_.size(), s.c_.begin());
  return s;
}

Series& Series::operator+=(const Series& o) {
  if (o.k_ < k_) *this = truncated(o.k_);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Series& Series::operator-=(const Series& o) {
  if (o.k_ < k_) *this = truncated(o.k_);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Series& Series::operator*=(cplx s) {
  for (auto& v : c_) v *= s;
  return *this;
}

Series Series::operator-() const {
  Series r = *this;
  for (auto& v : r.c_) v = -v;
  return r;
}

Series operator*(const Series& a, const Series& b) {
  const Series& lo = a.k_ <= b.k_ ? a : b;
  Series r(a.n_, lo.k_);
  for (const auto& t : lo.table_->products(lo.k_)) {
    const cplx x = a.c_[static_cast<std::size_t>(t.lhs)];
    const cplx y = b.c_[static_cast<std::size_t>(t.rhs)];
    if (x == 0.0 || y == 0.0) continue;
    r.c_[static_cast<std::size_t>(t.out)] += x * y;
  }
  return r;
}

Series Series::derivative(int m) const {
  if (k_ == 0) throw OrderOverflow("derivative of an order-0 jet");
  Series r(n_, k_ - 1);
  for (int i = 0; i < r.table_->size(); ++i) {
    int t = table_->shift_up(m, i);
    r.c_[static_cast<std::size_t>(i)] =
        c_[static_cast<std::size_t>(t)] * static_cast<double>(r.table_->monomial(i)[m] + 1);
  }
  return r;
}

Series compose_univariate(const Series& a, std::span<const cplx> derivs) {
  const int k = a.order();
  Series delta = a;
  delta[0] = 0.0;
  Series out = Series::constant(a.nvars(), k, derivs[0]);
  Series power = delta;
  double fact = 1;
  for (int j = 1; j <= k; ++j) {
    fact *= j;
    if (j > 1) power = power * delta;
    cplx w = derivs[static_cast<std::size_t>(j)] / fact;
    if (w != 0.0)
      for (std::size_t i = 0; i < out.size(); ++i) out[static_cast<int>(i)] += w * power[static_cast<int>(i)];
  }
  return out;
}

namespace {

Series real_power(const Series& a, double r) {
  const cplx a0 = a.value();
  if (a0 == 0.0) throw SingularPoint("power of zero");
  std::vector<cplx> d(static_cast<std::size_t>(a.order() + 1));
  cplx coef = 1.0;
  for (int j = 0; j <= a.order(); ++j) {
    d[static_cast<std::size_t>(j)] = coef * std::pow(a0, r - j);
    coef *= (r - j);
  }
  return compose_univariate(a, d);
}

}  // namespace

Series reciprocal(const Series& a) {
  const cplx a0 = a.value();
  if (std::abs(a0) < 1e-300) throw SingularPoint("division by zero");
  std::vector<cplx> d(static_cast<std::size_t>(a.order() + 1));
  cplx inv = 1.0 / a0, cur = inv;
  for (int j = 0; j <= a.order(); ++j) {
    d[static_cast<std::size_t>(j)] = cur;
    cur *= -static_cast<double>(j + 1) * inv;
  }
  return compose_univariate(a, d);
}

Series divide(const Series& a, const Series& b) { return a * reciprocal(b); }

Series exp(const Series& a) {
  std::vector<cplx> d(static_cast<std::size_t>(a.order() + 1), std::exp(a.value()));
  return compose_univariate(a, d);
}

Series log(const Series& a) {
  const cplx a0 = a.value();
  if (std::abs(a0) < 1e-300) throw SingularPoint("log of zero");
  std::vector<cplx> d(static_cast<std::size_t>(a.order() + 1));
  d[0] = std::log(a0);
  cplx inv = 1.0 / a0, cur = inv;
  for (int j = 1; j <= a.order(); ++j) {
    d[static_cast<std::size_t>(j)] = cur;
    cur *= -static_cast<double>(j) * inv;
  }
  return compose_univariate(a, d);
}

Series sqrt(const Series& a) { return real_power(a, 0.5); }

Series sin(const Series& a) {
  const cplx s = std::sin(a.value()), c = std::cos(a.value());
  const cplx cyc[4] = {s, c, -s, -c};
  std::vector<cplx> d(static_cast<std::size_t>(a.order() + 1));
  for (int j = 0; j <= a.order(); ++j) d[static_cast<std::size_t>(j)] = cyc[j % 4];
  return compose_univariate(a, d);
}

Series cos(const Series& a) {
  const cplx s = std::sin(a.value()), c = std::cos(a.value());
  const cplx cyc[4] = {c, -s, -c, s};
  std::vector<cplx> d(static_cast<std::size_t>(a.order() + 1));
  for (int j = 0; j <= a.order(); ++j) d[static_cast<std::size_t>(j)] = cyc[j % 4];
  return compose_univariate(a, d);
}

Series pow_rational(const Series& a, long p, long q) {
  if (q <= 0) throw std::invalid_argument("pow: nonpositive denominator");
  if (p % q == 0) {
    long e = p / q;
    if (e == 0) return Series::constant(a.nvars(), a.order(), 1.0);
    Series base = e < 0 ? reciprocal(a) : a;
    long m = e < 0 ? -e : e;
    Series r = Series::constant(a.nvars(), a.order(), 1.0);
    bool first = true;
    while (m) {
      if (m & 1) {
        r = first ? base : r * base;
        first = false;
      }
      m >>= 1;
      if (m) base = base * base;
    }
    return r;
  }
  return real_power(a, static_cast<double>(p) / static_cast<double>(q));
}

// ---------------------------------------------------------------------------

MatJet::MatJet(int n, int k, int rows, int cols)
    : n_(n), k_(k), rows_(rows), cols_(cols), table_(MonomialTable::get(n, k)) {
  data_.assign(static_cast<std::size_t>(table_->size() * rows * cols), cplx{});
  nz_.assign(static_cast<std::size_t>(table_->size()), 0);
}

MatJet MatJet::constant(int n, int k, const Mat& m) {
  MatJet r(n, k, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  r.touch(0) = m;
  return r;
}

MatJet MatJet::identity(int n, int k, int dim) {
  return constant(n, k, Mat::Identity(dim, dim));
}

MatJet MatJet::from_scalar(const Series& s) {
  MatJet r(s.nvars(), s.order(), 1, 1);
  for (int i = 0; i < r.size(); ++i)
    if (s[i] != 0.0) r.touch(i)(0, 0) = s[i];
  return r;
}

bool MatJet::all_zero() const {
  for (int i = 0; i < size(); ++i) {
    if (!nz_[static_cast<std::size_t>(i)]) continue;
    const cplx* p = data_.data() + static_cast<std::size_t>(i * rows_ * cols_);
    for (int j = 0; j < rows_ * cols_; ++j)
      if (p[j] != 0.0) return false;
  }
  return true;
}

Eigen::Map<Mat> MatJet::coef(int i) {
  return {data_.data() + static_cast<std::size_t>(i * rows_ * cols_), rows_, cols_};
}

Eigen::Map<const Mat> MatJet::coef(int i) const {
  return {data_.data() + static_cast<std::size_t>(i * rows_ * cols_), rows_, cols_};
}

Eigen::Map<Mat> MatJet::touch(int i) {
  nz_[static_cast<std::size_t>(i)] = 1;
  return coef(i);
}

Series MatJet::entry(int r, int c) const {
  Series s(n_, k_);
  for (int i = 0; i < size(); ++i)
    if (nz_[static_cast<std::size_t>(i)]) s[i] = coef(i)(r, c);
  return s;
}

double MatJet::max_abs_value() const {
  double m = 0;
  if (!nz_[0]) return 0;
  const cplx* p = data_.data();
  for (int j = 0; j < rows_ * cols_; ++j) m = std::max(m, std::abs(p[j]));
  return m;
}

double MatJet::l1_norm() const {
  double s = 0;
  for (int i = 0; i < size(); ++i)
    if (nz_[static_cast<std::size_t>(i)]) s += coef(i).norm();
  return s;
}

MatJet MatJet::truncated(int k) const {
  if (k >= k_) return *this;
  MatJet r(n_, k, rows_, cols_);
  std::copy_n(data_.begin(), r.data_.size(), r.data_.begin());
  std::copy_n(nz_.begin(), r.nz_.size(), r.nz_.begin());
  return r;
}

MatJet& MatJet::operator+=(const MatJet& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("jet sum: shape mismatch");
  if (o.k_ < k_) *this = truncated(o.k_);
  for (int i = 0; i < size(); ++i) {
    if (!o.nz_[static_cast<std::size_t>(i)]) continue;
    nz_[static_cast<std::size_t>(i)] = 1;
    cplx* p = data_.data() + static_cast<std::size_t>(i * rows_ * cols_);
    const cplx* q = o.data_.data() + static_cast<std::size_t>(i * rows_ * cols_);
    for (int j = 0; j < rows_ * cols_; ++j) p[j] += q[j];
  }
  return *this;
}

MatJet& MatJet::operator*=(cplx s) {
  if (s == 0.0) {
    std::fill(data_.begin(), data_.end(), cplx{});
    std::fill(nz_.begin(), nz_.end(), 0);
    return *this;
  }
  for (auto& v : data_) v *= s;
  return *this;
}

MatJet& MatJet::scale_by(const Series& s) {
  const int k = std::min(k_, s.order());
  const std::size_t blk = static_cast<std::size_t>(rows_ * cols_);
  MatJet r(n_, k, rows_, cols_);
  const auto& tab = k_ <= s.order() ? *table_ : s.table();
  for (const auto& t : tab.products(k)) {
    const cplx x = s[t.lhs];
    if (x == 0.0 || !nz_[static_cast<std::size_t>(t.rhs)]) continue;
    r.nz_[static_cast<std::size_t>(t.out)] = 1;
    cplx* p = r.data_.data() + static_cast<std::size_t>(t.out) * blk;
    const cplx* q = data_.data() + static_cast<std::size_t>(t.rhs) * blk;
    for (std::size_t j = 0; j < blk; ++j) p[j] += x * q[j];
  }
  *this = std::move(r);
  return *this;
}

MatJet operator*(const MatJet& a, const MatJet& b) { return multiply(a, b, std::min(a.k_, b.k_)); }

MatJet multiply(const MatJet& a, const MatJet& b, int k) {
  if (a.cols_ != b.rows_) throw std::invalid_argument("jet product: shape mismatch");
  k = std::min({k, a.k_, b.k_});
  MatJet r(a.n_, k, a.rows_, b.cols_);
  const auto& tab = a.k_ <= b.k_ ? *a.table_ : *b.table_;
  const std::size_t ba = static_cast<std::size_t>(a.rows_ * a.cols_);
  const std::size_t bb = static_cast<std::size_t>(b.rows_ * b.cols_);
  const std::size_t br = static_cast<std::size_t>(r.rows_ * r.cols_);
  for (const auto& t : tab.products(k)) {
    if (!a.nz_[static_cast<std::size_t>(t.lhs)] || !b.nz_[static_cast<std::size_t>(t.rhs)]) continue;
    r.nz_[static_cast<std::size_t>(t.out)] = 1;
    gemm_acc(r.data_.data() + static_cast<std::size_t>(t.out) * br,
             a.data_.data() + static_cast<std::size_t>(t.lhs) * ba,
             b.data_.data() + static_cast<std::size_t>(t.rhs) * bb, a.rows_, a.cols_, b.cols_);
  }
  return r;
}

MatJet MatJet::derivative(int m) const {
  if (k_ == 0) throw OrderOverflow("derivative of an order-0 jet");
  MatJet r(n_, k_ - 1, rows_, cols_);
  const std::size_t blk = static_cast<std::size_t>(rows_ * cols_);
  for (int i = 0; i < r.size(); ++i) {
    int t = table_->shift_up(m, i);
    if (!nz_[static_cast<std::size_t>(t)]) continue;
    r.nz_[static_cast<std::size_t>(i)] = 1;
    const double f = r.table_->monomial(i)[m] + 1;
    const cplx* q = data_.data() + static_cast<std::size_t>(t) * blk;
    cplx* p = r.data_.data() + static_cast<std::size_t>(i) * blk;
    for (std::size_t j = 0; j < blk; ++j) p[j] = f * q[j];
  }
  return r;
}

MatJet MatJet::adjoint() const {
  MatJet r(n_, k_, cols_, rows_);
  for (int i = 0; i < size(); ++i)
    if (nz_[static_cast<std::size_t>(i)]) r.touch(i) = coef(i).adjoint();
  return r;
}

MatJet MatJet::transpose() const {
  MatJet r(n_, k_, cols_, rows_);
  for (int i = 0; i < size(); ++i)
    if (nz_[static_cast<std::size_t>(i)]) r.touch(i) = coef(i).transpose();
  return r;
}

// ---------------------------------------------------------------------------

MatJet expm(const MatJet& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("expm: square matrix required");
  const int n = a.nvars(), k = a.order(), dim = a.rows();
  const double norm = a.l1_norm();
  int s = 0;
  if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  MatJet x = a;
  x *= std::ldexp(1.0, -s);
  MatJet sum = MatJet::identity(n, k, dim);
  MatJet term = MatJet::identity(n, k, dim);
  for (int j = 1; j <= 40; ++j) {
    term = term * x;
    term *= 1.0 / j;
    sum += term;
    if (term.l1_norm() <= 1e-18 * sum.l1_norm()) break;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

MatJet inverse(const MatJet& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("inverse: square matrix required");
  const Mat a0 = a.value();
  Eigen::FullPivLU<Mat> lu(a0);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) throw SingularPoint("matrix not invertible");
  const Mat b0 = lu.inverse();
  const int n = a.nvars(), k = a.order();
  MatJet B = MatJet::constant(n, k, b0);
  if (k == 0) return B;
  MatJet N = a;
  N.touch(0).setZero();
  MatJet M = B * N;
  M *= -1.0;
  MatJet term = B, sum = B;
  for (int j = 1; j <= k; ++j) {
    term = M * term;
    sum += term;
  }
  return sum;
}

Series determinant(const MatJet& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("det: square matrix required");
  const int d = a.rows();
  std::vector<std::vector<Series>> m(static_cast<std::size_t>(d));
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m[static_cast<std::size_t>(r)].push_back(a.entry(r, c));
  auto at = [&](int r, int c) -> Series& { return m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; };
  Series det = Series::constant(a.nvars(), a.order(), 1.0);
  double scale = 0;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) scale = std::max(scale, std::abs(at(r, c).value()));
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::abs(at(r, col).value()) > std::abs(at(piv, col).value())) piv = r;
    if (std::abs(at(piv, col).value()) <= 1e-14 * std::max(scale, 1e-300))
      throw SingularPoint("determinant: singular matrix");
    if (piv != col) {
      std::swap(m[static_cast<std::size_t>(piv)], m[static_cast<std::size_t>(col)]);
      det = -det;
    }
    det = det * at(col, col);
    Series inv = reciprocal(at(col, col));
    for (int r = col + 1; r < d; ++r) {
      Series f = at(r, col) * inv;
      for (int c = col + 1; c < d; ++c) at(r, c) -= f * at(col, c);
    }
  }
  return det;
}

Series trace(const MatJet& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("trace: square matrix required");
  Series s(a.nvars(), a.order());
  for (int i = 0; i < a.size(); ++i)
    if (a.nonzero(i)) s[i] = a.coef(i).trace();
  return s;
}

}  // namespace sqm
