#pragma once

// Finite matrix representations of fermionic operators, plus the fixed
// numeric tensors used by the models.
//
// Basis ordering: Jordan-Wigner with mode 1 as the outermost (leftmost)
// Kronecker factor. For a single mode the basis is (|0>, |1>) with
//   psi = [[0,0],[1,0]],  psibar = psi^dagger,  Z = diag(1,-1).
// A color factor, when present, is the innermost factor: op (x) 1_color.

#include <string>
#include <vector>

#include "sqm/field.hpp"
#include "sqm/jet.hpp"

namespace sqm {

struct FermionRep {
  enum class Kind { Complex, Hermitian };
  Kind kind = Kind::Complex;
  int modes = 0;      // d complex or D Hermitian fermions
  int fock_dim = 1;   // 2^d or 2^(D/2)
  int color_dim = 1;
  std::vector<Mat> psi;     // psi_a, or psi_A for the Hermitian kind
  std::vector<Mat> psibar;  // psibar_a; empty for the Hermitian kind

  int dim() const { return fock_dim * color_dim; }
  Mat identity() const { return Mat::Identity(dim(), dim()); }
  /// (-1)^F
  Mat parity() const;
  /// Embeds a color-space matrix as 1_fock (x) t.
  Mat color(const Mat& t) const;
  /// Embeds a fock-space matrix as m (x) 1_color.
  Mat fock(const Mat& m) const;
};

FermionRep complex_fermions(int d, int color_dim = 1);
/// psi_A = gamma_A / sqrt(2) with gamma_{2k-1} = Z..Z sigma1, gamma_{2k} = Z..Z sigma2.
FermionRep hermitian_fermions(int D, int color_dim = 1);
/// psi_{2a-1} = (psi_a + psibar_a)/sqrt2, psi_{2a} = i(psi_a - psibar_a)/sqrt2.
FermionRep realify(const FermionRep& rep);

enum class Ordering { PsiPsibar, PsibarPsi, PsiPsi, PsibarPsibar };

/// sum_ab M_ab X_a Y_b with (X, Y) chosen by the ordering. The Hermitian kind
/// accepts only PsiPsi.
Field bilinear(const FermionRep& rep, const Field& M, Ordering ord);
/// Basis matrices X_a Y_b, row-major, for use with contract().
std::vector<Mat> bilinear_basis(const FermionRep& rep, Ordering ord);
/// Fermion number sum_a psi_a psibar_a.
Mat fermion_number(const FermionRep& rep);

/// Dense integer-or-complex tensor with row-major layout.
struct ConstTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<cplx> data;
  cplx at(std::initializer_list<int> idx) const;
  /// Slice [a] of a rank-3 tensor as a matrix.
  Mat slice(int a) const;
};

/// Known names: epsilon, eta, eta_bar, gamma7, sigma_euclid, sigma_minkowski,
/// pauli. Indices are zero-based in storage.
ConstTensor const_tensor(const std::string& name);

double levi_civita(int a, int b, int c);        // zero-based
Mat pauli(int j);                               // j = 0 identity, 1..3
Mat eta_matrix(int a, bool bar = false);        // a = 0..2, 4x4
Mat gamma7_matrix(int a);                       // a = 0..6, 8x8
Mat sigma_euclid(int mu);                       // mu = 0..3 (x_1..x_4)
Mat sigma_minkowski(int mu);                    // mu = 0..3

/// max over a,b of |I^a I^b + delta^ab - eps^abc I^c|.
double quaternion_residual(const Mat& i1, const Mat& i2, const Mat& i3);
/// Minimum quaternion residual over the 8 sign flips and 6 orderings.
double best_quaternion_residual(const Mat& a, const Mat& b, const Mat& c);

}  // namespace sqm
