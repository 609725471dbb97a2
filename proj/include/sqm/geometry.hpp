#pragma once

// Frames, metrics and connections as Fields, plus the complex-structure
// predicates the extended-supersymmetry theorems depend on.
//
// Index layout of the matrix fields (M,N world, A,B frame):
//   frame(M,A)    = e^M_A        coframe(M,A) = e_{MA},  frame * coframe^T = 1
//   metric(M,N)   = e_{MA} e_{NA}
//   christoffel[M](N,K) = Gamma^N_{MK}
//   spin[M](A,B)  = Omega_{M,AB} = e_{AN} (d_M e^N_B + Gamma^N_{MK} e^K_B)
// A complex structure is stored with mixed indices, J(M,N) = I_M^N; the
// lowered form is I_{MN} = J g.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sqm/report.hpp"

namespace sqm {

enum class OmegaKind { RealSymmetric, Hermitian, ComplexDolbeault };

struct GeometryData {
  int D = 0;
  std::vector<std::string> coords;
  Field frame, coframe;
  Field metric, inverse_metric;
  std::vector<Field> christoffel;
  std::vector<Field> spin;
  Field measure;                     // sqrt det g, or det h in the Dolbeault case
  std::optional<Field> hermitian_metric;
  bool has_connection = false;       // christoffel/spin filled in
};

/// Geometry generated by e^omega. RealSymmetric: frame (e^omega)^T, metric
/// e^{-2 omega}. Hermitian: same frame, complex "metric" e^{-2 omega}, no
/// connection. ComplexDolbeault: omega is d x d over 2d real coordinates,
/// h = e^{omega^dagger} e^omega, measure det h, no real connection.
GeometryData from_omega(const Field& omega, OmegaKind kind, std::vector<std::string> coords);
/// Real geometry from an arbitrary invertible frame field.
GeometryData from_frame(const Field& frame, std::vector<std::string> coords);

/// D_P X_{MN} for a field with two lower world indices.
Field covariant_derivative(const GeometryData& g, const Field& X, int P);

struct ComplexStructure {
  Field J;  // I_M^N
  std::string label;
};

/// Curved structure induced by a constant frame-index matrix: J = e I e^{-1}.
ComplexStructure frame_structure(const GeometryData& g, const Mat& flat, std::string label = {});
Field lowered(const GeometryData& g, const ComplexStructure& I);
/// (I_flat)_{AB} = -eta^a (or -eta_bar^a), repeated along the diagonal of D = 4m.
Mat canonical_structure(int a, bool bar, int D);

/// Reports J^2 + 1, I_{MN} + I_{NM}, and D_P I_{MN}.
std::vector<CheckReport> check_complex_structure(const ComplexStructure& I, const GeometryData& g, const SampleSpec& s,
                                                 Expect covariant = Expect::Holds);
CheckReport check_quaternion(const ComplexStructure& I1, const ComplexStructure& I2, const ComplexStructure& I3,
                             const SampleSpec& s, Expect e = Expect::Holds);
/// nabla g = 0 and symmetric Christoffels.
std::vector<CheckReport> check_metric(const GeometryData& g, const SampleSpec& s);

struct GibbonsHawking {
  GeometryData geometry;
  std::array<ComplexStructure, 3> triple;
  std::string orientation;  // "eta", "eta_bar" or "none"
  std::array<double, 2> worst_residual{};  // max covariant residual of each candidate
};

/// V = eps + sum w_i / |x - c_i| on coordinates (x, y, z, t); per center the
/// potential is A = w (y, -x, 0) / (r (r + z)), singular on the negative z
/// half-axis below the center, so sample boxes must keep z above every center.
/// The orientation whose triple is covariantly constant at `s` is selected.
/// `deform` adds an extra (non-harmonic) expression to V.
GibbonsHawking gibbons_hawking(const std::vector<std::array<double, 3>>& centers, const std::vector<double>& weights,
                               double eps, const SampleSpec& s, const std::string& deform = {});

/// ds^2 = e^{2u}(dx1^2 + dx2^2) + dx3^2 + dx4^2, i.e. omega = diag(-u, -u, 0, 0).
GeometryData warped_kahler(const Expr& u, std::vector<std::string> coords);

}  // namespace sqm
