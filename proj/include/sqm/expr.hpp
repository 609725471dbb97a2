#pragma once

// Scalar expression trees over real coordinates, with a small infix parser.
// See docs/dsl.md for the grammar.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "sqm/jet.hpp"

namespace sqm {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

enum class ExprOp : std::uint8_t { Const, Var, Neg, Add, Sub, Mul, Div, Exp, Log, Sqrt, Sin, Cos, Pow };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprOp op;
  cplx value{};      // Const
  int var = -1;      // Var
  long p = 1, q = 1; // Pow exponent p/q
  ExprPtr a, b;
  std::uint32_t mask = 0;  // coordinates the expression depends on
};

class Expr {
 public:
  Expr() : Expr(cplx{0.0}) {}
  Expr(cplx c);
  Expr(double c) : Expr(cplx{c}) {}
  explicit Expr(ExprPtr n) : node_(std::move(n)) {}

  static Expr var(int index);
  static Expr unary(ExprOp op, const Expr& a);
  static Expr pow(const Expr& a, long p, long q = 1);

  const ExprNode& node() const { return *node_; }
  const ExprPtr& ptr() const { return node_; }
  std::uint32_t mask() const { return node_->mask; }
  bool is_const() const { return node_->op == ExprOp::Const; }
  bool is_zero() const { return is_const() && node_->value == 0.0; }
  bool is_one() const { return is_const() && node_->value == 1.0; }
  /// Highest coordinate index referenced plus one.
  int arity() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  Expr operator-() const;

 private:
  ExprPtr node_;
};

Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);

using SymbolTable = std::map<std::string, Expr>;

/// Parses infix text. Identifiers resolve to coordinates first, then to
/// entries of `symbols`, then to the constants `i` and `pi`.
Expr parse(const std::string& text, const std::vector<std::string>& coords,
           const SymbolTable& symbols = {});

/// Prints text that parses back to an expression with identical jets.
std::string print(const Expr& e, const std::vector<std::string>& coords);
/// For display: short numbers (1/2, sqrt2, %.6g); does not round-trip.
std::string print_short(const Expr& e, const std::vector<std::string>& coords);
std::string short_number(cplx v);

/// Per-point evaluation cache; one instance per thread.
class ExprEvaluator {
 public:
  ExprEvaluator(std::vector<double> point) : x_(std::move(point)) {}
  const std::vector<double>& point() const { return x_; }
  int nvars() const { return static_cast<int>(x_.size()); }
  /// Jet of order k at the stored point.
  const Series& eval(const Expr& e, int k);

 private:
  const Series& eval(const ExprNode* n, int k);
  std::vector<double> x_;
  struct Key {
    const ExprNode* n;
    int k;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<const void*>()(k.n) * 31u + static_cast<std::size_t>(k.k);
    }
  };
  std::unordered_map<Key, Series, KeyHash> cache_;
};

/// Value-only convenience.
cplx evaluate(const Expr& e, const std::vector<double>& point);

}  // namespace sqm
