#pragma once

// Model constructors. Every model is built from the free flat complex model
// by similarity transformations and cyclic reductions where possible; the
// literal formula forms are kept alongside as independent cross-checks.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqm/clifford.hpp"
#include "sqm/geometry.hpp"

namespace sqm {

enum class Algebra { N2, N4, N8, Central, Gauge, Exploratory };
const char* to_string(Algebra a);

struct NamedOp {
  std::string name;
  DiffOp op;
};

/// A relation the model claims: `diff()` vanishes at samples (or, with
/// Expect::Violated, visibly does not).
struct ModelRelation {
  std::string name;
  std::vector<std::string> operands;
  std::function<DiffOp()> diff;
  Expect expect = Expect::Holds;
  double tol = kPassTol;
};

struct Model {
  std::string name;
  std::vector<std::string> coords;
  FermionRep rep;
  std::vector<std::pair<NamedOp, NamedOp>> supercharges;  // (Q_i, Qbar_i)
  std::vector<NamedOp> hermitian;                          // self-adjoint supercharges
  DiffOp hamiltonian;
  std::vector<NamedOp> constraints;
  std::vector<NamedOp> extras;
  Field measure = Field::scalar(1.0);
  Algebra algebra = Algebra::N2;
  std::vector<ModelRelation> relations;
  /// Non-operator checks (complex structures, constant tensors); the Expect
  /// applies to covariant constancy of complex structures.
  std::function<std::vector<CheckReport>(const SampleSpec&, Expect)> geometry_checks;
  std::vector<std::string> recipe;
  std::map<std::string, std::string> formulas;
  SampleSpec samples;  // suggested sampling domain
  std::function<Model()> replay;

  const DiffOp& op(const std::string& name) const;
  bool has_op(const std::string& name) const;
  std::vector<std::string> op_names() const;
};

// ---- building blocks ------------------------------------------------------

std::vector<std::string> complex_coords(int d);  // x1, y1, x2, y2, ...
std::vector<std::string> real_coords(int D, const std::string& stem = "x");
DiffOp mult(const std::vector<std::string>& coords, const Field& f);
DiffOp mult(const std::vector<std::string>& coords, const Mat& m);
/// sum_M X_M o p_M for matrix fields X_M.
DiffOp momentum_sum(const std::vector<std::string>& coords, const std::vector<Field>& X);

// ---- constructors ---------------------------------------------------------

Model free_complex(int d);
Model free_real(int D);
Model witten(const Expr& W);
/// omega: d x d over complex_coords(d). W, when given, twists with
/// G = W - 1/4 ln det h.
Model dolbeault(const Field& omega, int d, std::optional<Expr> W = std::nullopt);
/// omega real symmetric over real_coords(D); torsion B antisymmetric (world indices).
Model de_rham(const Field& omega, int D, std::optional<Expr> W = std::nullopt, std::optional<Field> torsion = std::nullopt);
/// omega Hermitian, depending only on x1..xD.
Model quasicomplex(const Field& omega, int D);
/// Kahler model on a real geometry with structure J = e I e^{-1}. When the
/// geometry came from a symmetric omega, passing it adds the similarity path.
Model kahler(const GeometryData& G, const Mat& I_flat, const std::string& label = "kahler",
             std::optional<Field> omega = std::nullopt);
Model hyperkahler(const GeometryData& G, const std::array<Mat, 3>& I_flat, const std::string& label = "hyperkahler");
/// g over complex_coords(2); `drop` lists coordinates removed by cyclic reduction.
Model hkt_conformal(const Expr& g, const std::vector<std::string>& drop = {});
Model okt_flat();
Model instanton(double rho);
Model gauge_sym3();
Model gauge_sym3_resolved(double g0 = 1.0);
Model wz_modes(const std::vector<std::array<int, 3>>& modes);

enum class TorsionKind { Holomorphic, Antiholomorphic };
/// Q -> e^R Q e^-R with R = B_AB psi_A psi_B (or psibar psibar); Qbar by the measure adjoint.
Model torsion_rotate(const Model& m, const Field& B, TorsionKind kind);

// ---- catalog ---------------------------------------------------------------

struct CatalogEntry {
  std::string name;
  std::string parameters;
  Algebra algebra;
  std::string anchor;
};
const std::vector<CatalogEntry>& catalog();

}  // namespace sqm
