#pragma once

// Truncated multivariate Taylor series ("jets") with scalar and matrix
// coefficients. A jet of order k in n variables stores c_alpha =
// (d^alpha f)(x0) / alpha! for every multi-index |alpha| <= k.
//
// Monomials are enumerated in graded order, so the coefficients of an order-k
// jet are a prefix of those of any order-(k+j) jet at the same point.

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sqm {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;

inline constexpr int kMaxCoords = 16;
/// Hard ceiling on internally propagated jet orders.
inline constexpr int kMaxJetOrder = 10;
/// Public cap on requested derivative order.
inline constexpr int kDerivativeCap = 4;

class OrderOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularPoint : public std::runtime_error {
 public:
  SingularPoint(const std::string& what, std::vector<double> point = {})
      : std::runtime_error(what), point_(std::move(point)) {}
  const std::vector<double>& point() const { return point_; }
  void set_point(std::vector<double> p) { point_ = std::move(p); }

 private:
  std::vector<double> point_;
};

/// Derivative multi-index over at most kMaxCoords coordinates.
struct MultiIndex {
  std::array<std::uint8_t, kMaxCoords> e{};

  static MultiIndex unit(int m) {
    MultiIndex a;
    a.e[static_cast<std::size_t>(m)] = 1;
    return a;
  }
  int order() const {
    int s = 0;
    for (auto v : e) s += v;
    return s;
  }
  std::uint8_t operator[](int m) const { return e[static_cast<std::size_t>(m)]; }
  std::uint8_t& operator[](int m) { return e[static_cast<std::size_t>(m)]; }
  MultiIndex operator+(const MultiIndex& o) const {
    MultiIndex r;
    for (int i = 0; i < kMaxCoords; ++i) r[i] = static_cast<std::uint8_t>((*this)[i] + o[i]);
    return r;
  }
  MultiIndex operator-(const MultiIndex& o) const {
    MultiIndex r;
    for (int i = 0; i < kMaxCoords; ++i) r[i] = static_cast<std::uint8_t>((*this)[i] - o[i]);
    return r;
  }
  bool dominates(const MultiIndex& o) const {
    for (int i = 0; i < kMaxCoords; ++i)
      if (o[i] > (*this)[i]) return false;
    return true;
  }
  /// Bitmask of coordinates with nonzero exponent.
  std::uint32_t support() const {
    std::uint32_t m = 0;
    for (int i = 0; i < kMaxCoords; ++i)
      if (e[static_cast<std::size_t>(i)]) m |= (1u << i);
    return m;
  }
  auto operator<=>(const MultiIndex&) const = default;
};

/// All sub-multi-indices gamma <= alpha.
std::vector<MultiIndex> sub_indices(const MultiIndex& alpha, int n);
/// prod_i binom(alpha_i, gamma_i)
double multi_binomial(const MultiIndex& alpha, const MultiIndex& gamma);
/// alpha!
double multi_factorial(const MultiIndex& alpha);

/// Monomial enumeration and product/shift tables for (n variables, order k).
class MonomialTable {
 public:
  struct Triple {
    std::int32_t lhs, rhs, out;
  };

  static std::shared_ptr<const MonomialTable> get(int n, int k);

  int n() const { return n_; }
  int order() const { return k_; }
  int size() const { return static_cast<int>(monomials_.size()); }
  /// Number of monomials of total degree <= j (prefix length).
  int prefix(int j) const { return prefix_[static_cast<std::size_t>(j)]; }
  const MultiIndex& monomial(int i) const { return monomials_[static_cast<std::size_t>(i)]; }
  int index_of(const MultiIndex& a) const;  // -1 when |a| > k
  /// Product triples sorted by output degree; the first product_prefix(j)
  /// entries are exactly those with deg(out) <= j.
  std::span<const Triple> products(int j) const {
    return {triples_.data(), static_cast<std::size_t>(triple_prefix_[static_cast<std::size_t>(j)])};
  }
  /// up_[m][i] = index of monomial(i) + e_m, or -1.
  int shift_up(int m, int i) const { return up_[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)]; }

 private:
  MonomialTable(int n, int k);
  int n_, k_;
  std::vector<MultiIndex> monomials_;
  std::vector<int> prefix_;
  std::vector<Triple> triples_;
  std::vector<int> triple_prefix_;
  std::vector<std::vector<int>> up_;
};

/// Scalar jet.
class Series {
 public:
  Series() = default;
  Series(int n, int k);
  static Series constant(int n, int k, cplx v);
  static Series variable(int n, int k, int m, double x0);

  int nvars() const { return n_; }
  int order() const { return k_; }
  cplx value() const { return c_.empty() ? cplx{} : c_[0]; }
  cplx& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
  cplx operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return c_.size(); }
  const MonomialTable& table() const { return *table_; }
  std::shared_ptr<const MonomialTable> table_ptr() const { return table_; }

  /// Partial derivative d^alpha f at the expansion point.
  cplx partial(const MultiIndex& alpha) const;

  Series truncated(int k) const;
  Series& operator+=(const Series& o);
  Series& operator-=(const Series& o);
  Series& operator*=(cplx s);
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator*(const Series& a, const Series& b);
  friend Series operator*(Series a, cplx s) { return a *= s; }
  Series operator-() const;
  Series derivative(int m) const;  // order k-1

 private:
  int n_ = 0, k_ = 0;
  std::shared_ptr<const MonomialTable> table_;
  std::vector<cplx> c_;
};

Series reciprocal(const Series& a);
Series divide(const Series& a, const Series& b);
/// f(a) given f^(j)(a0), j = 0..k, where a0 = a.value().
Series compose_univariate(const Series& a, std::span<const cplx> derivs);
Series exp(const Series& a);
Series log(const Series& a);
Series sqrt(const Series& a);
Series sin(const Series& a);
Series cos(const Series& a);
/// a^(p/q). Integer exponents use repeated multiplication.
Series pow_rational(const Series& a, long p, long q);

/// Matrix-valued jet; coefficients stored contiguously, structural zeros flagged.
class MatJet {
 public:
  MatJet() = default;
  MatJet(int n, int k, int rows, int cols);
  static MatJet constant(int n, int k, const Mat& m);
  static MatJet identity(int n, int k, int dim);
  static MatJet from_scalar(const Series& s);

  int nvars() const { return n_; }
  int order() const { return k_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return table_ ? table_->prefix(k_) : 0; }
  const MonomialTable& table() const { return *table_; }
  std::shared_ptr<const MonomialTable> table_ptr() const { return table_; }

  bool nonzero(int i) const { return nz_[static_cast<std::size_t>(i)] != 0; }
  bool all_zero() const;
  Eigen::Map<Mat> coef(int i);
  Eigen::Map<const Mat> coef(int i) const;
  /// Marks coefficient i as potentially nonzero and returns its storage.
  Eigen::Map<Mat> touch(int i);
  Mat value() const { return Mat(coef(0)); }
  Series entry(int r, int c) const;
  /// Max absolute entry over the value (order-0) coefficient.
  double max_abs_value() const;
  /// Sum of Frobenius norms of all coefficients (submultiplicative bound).
  double l1_norm() const;

  MatJet truncated(int k) const;
  MatJet& operator+=(const MatJet& o);
  MatJet& operator*=(cplx s);
  MatJet& scale_by(const Series& s);
  MatJet derivative(int m) const;
  MatJet adjoint() const;
  MatJet transpose() const;

  friend MatJet operator*(const MatJet& a, const MatJet& b);
  /// Product truncated at order k.
  friend MatJet multiply(const MatJet& a, const MatJet& b, int k);
  friend MatJet operator+(MatJet a, const MatJet& b) { return a += b; }

 private:
  int n_ = 0, k_ = 0, rows_ = 0, cols_ = 0;
  std::shared_ptr<const MonomialTable> table_;
  std::vector<cplx> data_;
  std::vector<std::uint8_t> nz_;
};

MatJet multiply(const MatJet& a, const MatJet& b, int k);

/// exp of a square matrix jet by scaling-and-squaring of the Taylor series
/// in the jet algebra.
MatJet expm(const MatJet& a);
/// Inverse via Neumann expansion around the value; throws SingularPoint.
MatJet inverse(const MatJet& a);
/// Determinant via pivoted elimination over scalar jets; throws SingularPoint.
Series determinant(const MatJet& a);
Series trace(const MatJet& a);

}  // namespace sqm
