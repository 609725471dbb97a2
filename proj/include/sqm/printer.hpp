#pragma once

// Human-readable operators: coefficients split into normal-ordered fermion
// monomials (psi's left of psibar's), derivatives written as momenta.

#include <optional>
#include <string>
#include <vector>

#include "sqm/clifford.hpp"
#include "sqm/diffop.hpp"

namespace sqm {

/// d/dx_var, simplified a little.
Expr derivative(const Expr& e, int var);

struct Monomial {
  std::string name;  // "psi1 psibar2", "1", with a color factor when present
  cplx coef;
};
/// Normal-ordered decomposition of a constant matrix on the rep's space.
std::vector<Monomial> fermion_monomials(const Mat& m, const FermionRep& rep, double cutoff = 1e-12);

/// Whole operator, one line per (momentum monomial, fermion monomial).
/// Coefficients that do not reduce to expressions are shown numerically at
/// `point` (or marked opaque when none is given).
std::string pretty(const DiffOp& op, const FermionRep& rep, const std::optional<std::vector<double>>& point = {});

}  // namespace sqm
