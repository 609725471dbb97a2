#pragma once

// Matrix-valued fields: immutable DAGs whose leaves are expression grids or
// constant matrices. A FieldEvaluator computes jets of many fields at one
// point, sharing common subgraphs.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sqm/expr.hpp"
#include "sqm/jet.hpp"

namespace sqm {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FieldOp : std::uint8_t {
  Const,
  Grid,
  Entry,
  Transpose,
  Adjoint,
  Assemble,
  Sum,
  Product,
  ScalarMul,
  Contract,
  Exp,
  Inverse,
  Det,
  Trace,
  ScalarFn,
  Deriv,
  Restrict,
};

/// Embedding of a reduced coordinate space into a larger one. Old coordinate
/// i is either new coordinate `to_new[i]` or frozen at `fixed[i]`.
struct Restriction {
  std::vector<int> to_new;
  std::vector<double> fixed;
  bool operator==(const Restriction&) const = default;
  auto operator<=>(const Restriction&) const = default;
};

struct FieldNode;
using FieldPtr = std::shared_ptr<const FieldNode>;

struct FieldNode {
  FieldOp op;
  int rows = 0, cols = 0;
  std::vector<FieldPtr> kids;
  std::vector<cplx> weights;      // Sum
  Mat matrix;                     // Const
  std::string label;              // Const: display name
  std::vector<Expr> grid;         // Grid, row-major
  std::vector<Mat> basis;         // Contract, row-major over child entries
  MultiIndex alpha;               // Deriv
  ExprOp fn = ExprOp::Exp;        // ScalarFn
  long p = 1, q = 1;              // ScalarFn Pow
  int r = 0, c = 0;               // Entry
  std::shared_ptr<const Restriction> restriction;
  std::uint32_t mask = 0;         // coordinates this field may depend on
  bool zero = false;              // structurally zero
  bool identity = false;          // constant identity matrix
};

class Field {
 public:
  Field() : Field(zero(1, 1)) {}
  explicit Field(FieldPtr p) : node_(std::move(p)) {}

  static Field constant(const Mat& m, std::string label = {});
  static Field scalar(cplx v) { return constant(Mat::Constant(1, 1, v)); }
  static Field scalar(double v) { return scalar(cplx{v}); }
  static Field zero(int rows, int cols);
  static Field identity(int dim);
  static Field scalar(const Expr& e);
  static Field grid(int rows, int cols, std::vector<Expr> entries);

  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  bool is_zero() const { return node_->zero; }
  bool is_const() const { return node_->op == FieldOp::Const; }
  bool is_identity() const { return node_->identity; }
  bool is_scalar() const { return rows() == 1 && cols() == 1; }
  std::uint32_t mask() const { return node_->mask; }
  const FieldNode& node() const { return *node_; }
  const FieldPtr& ptr() const { return node_; }

  friend Field operator+(const Field& a, const Field& b);
  friend Field operator-(const Field& a, const Field& b);
  /// Matrix product; a 1x1 operand acts as a scalar.
  friend Field operator*(const Field& a, const Field& b);
  friend Field operator*(cplx s, const Field& a);
  Field operator-() const;

 private:
  FieldPtr node_;
};

Field linear_combination(const std::vector<Field>& terms, const std::vector<cplx>& weights);
Field transpose(const Field& a);
Field adjoint(const Field& a);
Field entry(const Field& a, int r, int c);
/// rows x cols matrix from 1x1 fields, row-major.
Field assemble(int rows, int cols, const std::vector<Field>& entries);
/// sum_ij a_ij basis_ij for constant matrices basis (row-major over a's entries).
Field contract(const Field& a, const std::vector<Mat>& basis);
Field mat_exp(const Field& a);
Field inverse(const Field& a);
Field det(const Field& a);
Field trace(const Field& a);
/// exp / log / sqrt / sin / cos / pow applied to a 1x1 field.
Field scalar_fn(ExprOp fn, const Field& a, long p = 1, long q = 1);
Field deriv(const Field& a, const MultiIndex& alpha);
inline Field deriv(const Field& a, int m) { return deriv(a, MultiIndex::unit(m)); }
Field restrict_field(const Field& a, std::shared_ptr<const Restriction> r);

/// Evaluates fields at a single point. Not thread-safe; use one per thread.
class FieldEvaluator {
 public:
  explicit FieldEvaluator(std::vector<double> point);
  ~FieldEvaluator();
  FieldEvaluator(const FieldEvaluator&) = delete;
  FieldEvaluator& operator=(const FieldEvaluator&) = delete;

  const std::vector<double>& point() const { return x_; }
  int nvars() const { return static_cast<int>(x_.size()); }

  /// Registers roots with the orders they will be requested at. Planning all
  /// roots before the first eval lets shared subgraphs be computed once.
  void plan(const std::vector<std::pair<Field, int>>& roots);
  /// Jet of order k (planning it first when needed).
  const MatJet& eval(const Field& f, int k = 0);
  /// Cached jet of a node if it has been computed.
  const MatJet* cached(const FieldNode* n) const;

 private:
  void run(const std::vector<std::pair<const FieldNode*, int>>& roots);
  MatJet compute(const FieldNode* n, int k);
  FieldEvaluator& sub(const Restriction& r);

  std::vector<double> x_;
  ExprEvaluator exprs_;
  std::unordered_map<const FieldNode*, MatJet> done_;
  std::vector<FieldPtr> pins_;
  std::map<Restriction, std::unique_ptr<FieldEvaluator>> subs_;
};

/// Value and partial derivatives of one scalar entry.
struct Jet {
  cplx value;
  std::map<MultiIndex, cplx> partials;
};

/// Entry jets up to order (<= kDerivativeCap), row-major.
std::vector<Jet> jet(const Field& f, const std::vector<double>& point, int order);
Mat value(const Field& f, const std::vector<double>& point);

}  // namespace sqm
