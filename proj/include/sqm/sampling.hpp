#pragma once

// Random-point zero testing of operators. Coefficients are analytic, so a
// nonzero coefficient vanishing at every sampled point is a measure-zero
// accident; we treat a small residual at all points as an identity.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sqm/diffop.hpp"

namespace sqm {

struct Exclusion {
  enum class Kind { Nonzero, Positive };
  Kind kind = Kind::Nonzero;
  Expr expr;
  double margin = 1e-3;  // |expr| > margin, or Re expr > margin
  std::string text;
};

struct SampleSpec {
  std::vector<std::pair<double, double>> box;
  int n_points = 20;
  std::uint64_t seed = 1;
  std::vector<Exclusion> exclusions;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation failed at a specific point (singular matrix, pole...).
class PointError : public std::runtime_error {
 public:
  PointError(const std::string& what, std::vector<double> p) : std::runtime_error(what), point(std::move(p)) {}
  std::vector<double> point;
};

/// Rejection-samples n_points points; deterministic in the seed.
std::vector<std::vector<double>> sample_points(const SampleSpec& s);

struct Residual {
  double max_abs = 0;
  std::vector<double> argmax_point;
  double scale = 0;
};

/// Largest coefficient entry of every operator over the points. The scale is
/// the largest entry among the summands of each coefficient, so a difference
/// of two big operators is judged against their own size.
Residual residual(const std::vector<const DiffOp*>& ops, const std::vector<std::vector<double>>& points);
Residual residual_serial(const std::vector<const DiffOp*>& ops, const std::vector<std::vector<double>>& points);
/// Same measure for plain matrix fields.
Residual field_residual(const std::vector<Field>& fields, const std::vector<std::vector<double>>& points);
Residual field_residual_serial(const std::vector<Field>& fields, const std::vector<std::vector<double>>& points);
inline Residual residual(const DiffOp& op, const std::vector<std::vector<double>>& points) {
  return residual(std::vector<const DiffOp*>{&op}, points);
}

inline constexpr double kPassTol = 1e-9;
inline constexpr double kViolatedTol = 1e-3;

inline bool within(const Residual& r, double tol) { return r.max_abs <= tol * (1 + r.scale); }

std::pair<bool, Residual> is_zero(const DiffOp& a, const SampleSpec& s, double tol = kPassTol);

}  // namespace sqm
