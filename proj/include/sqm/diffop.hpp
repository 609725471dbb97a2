#pragma once

// Differential operators  A = sum_alpha C_alpha(x) d^alpha  whose
// coefficients act on a fermionic module (dim x dim matrix fields).
// Stored with partial derivatives; momenta p_M = -i d_M are applied when
// operators are built.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sqm/field.hpp"

namespace sqm {

inline constexpr int kMaxOperatorOrder = 4;

class ReductionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DiffOp {
 public:
  DiffOp() = default;
  DiffOp(std::vector<std::string> coords, int dim);

  static DiffOp multiplication(std::vector<std::string> coords, const Field& f);
  static DiffOp partial(std::vector<std::string> coords, int dim, int m);
  /// p_m = -i d_m times the identity.
  static DiffOp momentum(std::vector<std::string> coords, int dim, int m);

  int ncoords() const { return static_cast<int>(coords_.size()); }
  int dim() const { return dim_; }
  const std::vector<std::string>& coords() const { return coords_; }
  const std::map<MultiIndex, Field>& terms() const { return terms_; }
  Field coefficient(const MultiIndex& a) const;
  int order() const;

  /// Adds c * F d^alpha.
  void add_term(const MultiIndex& alpha, const Field& F, cplx c = 1.0);
  /// F * A: left multiplication of every coefficient.
  DiffOp left_multiply(const Field& F) const;

  friend DiffOp operator+(const DiffOp& a, const DiffOp& b);
  friend DiffOp operator-(const DiffOp& a, const DiffOp& b);
  friend DiffOp operator*(cplx s, const DiffOp& a);
  DiffOp operator-() const { return cplx(-1.0) * *this; }

 private:
  std::vector<std::string> coords_;
  int dim_ = 0;
  std::map<MultiIndex, Field> terms_;
};

/// Operator product A o B with coefficient derivatives redistributed by Leibniz.
DiffOp compose(const DiffOp& a, const DiffOp& b);
DiffOp anticommutator(const DiffOp& a, const DiffOp& b);
DiffOp commutator(const DiffOp& a, const DiffOp& b);
/// Flat-measure adjoint: (C d^alpha)^dagger = (-1)^|alpha| d^alpha o C^dagger.
DiffOp naive_dagger(const DiffOp& a);
/// mu^-1 o naive_dagger(a) o mu for a positive 1x1 field mu.
DiffOp adjoint_with_measure(const DiffOp& a, const Field& mu);
/// e^R A e^-R computed by d_M -> d_M + e^R d_M(e^-R), C -> e^R C e^-R.
DiffOp similarity(const DiffOp& a, const Field& R);
/// Direct product mult(e^R) o A o mult(e^-R); kept as an independent oracle.
DiffOp similarity_by_composition(const DiffOp& a, const Field& R);

struct SampleSpec;

/// Drops the coordinates in `dropped` (their momenta act as zero). Requires
/// that no coefficient depends on a dropped coordinate: checked structurally
/// from dependency masks, and numerically at `check` sample points when the
/// masks alone cannot decide.
DiffOp reduce_cyclic(const DiffOp& a, const std::vector<int>& dropped, const SampleSpec* check = nullptr,
                     const std::vector<double>& fixed_values = {});
/// Same embedding applied to a single field.
Field reduce_field(const Field& f, int ncoords, const std::vector<int>& dropped,
                   const std::vector<double>& fixed_values = {});

}  // namespace sqm
