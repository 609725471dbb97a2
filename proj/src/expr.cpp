#include "sqm/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <optional>

namespace sqm {

namespace {

ExprPtr make(ExprOp op, ExprPtr a = nullptr, ExprPtr b = nullptr) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->mask = (a ? a->mask : 0u) | (b ? b->mask : 0u);
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

}  // namespace

Expr::Expr(cplx c) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Const;
  n->value = c;
  node_ = n;
}

Expr Expr::var(int index) {
  if (index < 0 || index >= kMaxCoords) throw std::invalid_argument("coordinate index out of range");
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Var;
  n->var = index;
  n->mask = 1u << index;
  return Expr(ExprPtr(n));
}

int Expr::arity() const {
  std::uint32_t m = mask();
  int r = 0;
  while (m) {
    ++r;
    m >>= 1;
  }
  return r;
}

Expr Expr::unary(ExprOp op, const Expr& a) {
  if (a.is_const()) {
    cplx v = a.node().value;
    switch (op) {
      case ExprOp::Neg: return Expr(-v);
      case ExprOp::Exp: return Expr(std::exp(v));
      case ExprOp::Sin: return Expr(std::sin(v));
      case ExprOp::Cos: return Expr(std::cos(v));
      default: break;
    }
  }
  if (op == ExprOp::Neg && a.node().op == ExprOp::Neg) return Expr(a.node().a);
  return Expr(make(op, a.ptr()));
}

Expr Expr::pow(const Expr& a, long p, long q) {
  if (q <= 0) throw std::invalid_argument("pow: denominator must be positive");
  long g = std::gcd(p, q);
  if (g > 1) {
    p /= g;
    q /= g;
  }
  if (p == 0) return Expr(1.0);
  if (p == 1 && q == 1) return a;
  if (a.is_const() && q == 1) {
    cplx base = a.node().value, r = 1.0;
    if (p < 0) base = 1.0 / base;
    for (long j = 0; j < std::abs(p); ++j) r *= base;
    return Expr(r);
  }
  auto n = make(ExprOp::Pow, a.ptr());
  auto* raw = const_cast<ExprNode*>(n.get());
  raw->p = p;
  raw->q = q;
  return Expr(n);
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.is_const() && b.is_const()) return Expr(a.node().value + b.node().value);
  return Expr(make(ExprOp::Add, a.ptr(), b.ptr()));
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  if (a.is_const() && b.is_const()) return Expr(a.node().value - b.node().value);
  return Expr(make(ExprOp::Sub, a.ptr(), b.ptr()));
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr(0.0);
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  if (a.is_const() && b.is_const()) return Expr(a.node().value * b.node().value);
  return Expr(make(ExprOp::Mul, a.ptr(), b.ptr()));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_one()) return a;
  if (a.is_zero() && !b.is_zero()) return Expr(0.0);
  if (a.is_const() && b.is_const() && !b.is_zero()) return Expr(a.node().value / b.node().value);
  return Expr(make(ExprOp::Div, a.ptr(), b.ptr()));
}

Expr Expr::operator-() const { return unary(ExprOp::Neg, *this); }

Expr exp(const Expr& a) { return Expr::unary(ExprOp::Exp, a); }
Expr log(const Expr& a) { return Expr::unary(ExprOp::Log, a); }
Expr sqrt(const Expr& a) { return Expr::unary(ExprOp::Sqrt, a); }
Expr sin(const Expr& a) { return Expr::unary(ExprOp::Sin, a); }
Expr cos(const Expr& a) { return Expr::unary(ExprOp::Cos, a); }

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Rational {
  long p, q;
};

std::optional<Rational> to_rational(double v) {
  if (!std::isfinite(v)) return std::nullopt;
  // continued fraction with bounded denominator, accepted only when exact
  double x = v;
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  for (int it = 0; it < 40; ++it) {
    double a = std::floor(x);
    if (std::abs(a) > 1e12) break;
    long ai = static_cast<long>(a);
    long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    if (k1 > 1000000) break;
    if (static_cast<double>(h1) / static_cast<double>(k1) == v) return Rational{h1, k1};
    double frac = x - a;
    if (frac == 0) break;
    x = 1.0 / frac;
  }
  return std::nullopt;
}

class Parser {
 public:
  Parser(const std::string& s, const std::vector<std::string>& coords, const SymbolTable& sym)
      : s_(s), coords_(coords), sym_(sym) {}

  Expr run() {
    Expr e = expression(0);
    skip();
    if (pos_ != s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return e;
  }

 private:
  const std::string& s_;
  const std::vector<std::string>& coords_;
  const SymbolTable& sym_;
  std::size_t pos_ = 0;

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  static int infix_power(char c) {
    switch (c) {
      case '+': case '-': return 10;
      case '*': case '/': return 20;
      case '^': return 40;
      default: return -1;
    }
  }

  Expr expression(int min_bp) {
    Expr lhs = prefix();
    for (;;) {
      char c = peek();
      int bp = infix_power(c);
      if (bp < 0 || bp < min_bp) break;
      std::size_t at = pos_;
      ++pos_;
      if (c == '^') {
        // right associative; exponent must fold to a rational constant
        Rational r = exponent(at);
        lhs = Expr::pow(lhs, r.p, r.q);
        continue;
      }
      Expr rhs = expression(bp + 1);
      switch (c) {
        case '+': lhs = lhs + rhs; break;
        case '-': lhs = lhs - rhs; break;
        case '*': lhs = lhs * rhs; break;
        case '/': lhs = lhs / rhs; break;
      }
    }
    return lhs;
  }

  Rational exponent(std::size_t at) {
    Expr e = expression(40);
    if (!e.is_const() || e.node().value.imag() != 0.0)
      throw ParseError("exponent must be a real rational constant", at);
    auto r = to_rational(e.node().value.real());
    if (!r) throw ParseError("exponent is not a rational number", at);
    return *r;
  }

  Expr prefix() {
    char c = peek();
    if (c == '\0') throw ParseError("unexpected end of input", pos_);
    if (c == '-') {
      ++pos_;
      return -expression(30);
    }
    if (c == '+') {
      ++pos_;
      return expression(30);
    }
    if (c == '(') {
      std::size_t at = pos_++;
      Expr e = expression(0);
      if (peek() != ')') throw ParseError("missing ')' for '(' opened at " + std::to_string(at), pos_);
      ++pos_;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  Expr number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    return Expr(v);
  }

  Expr identifier() {
    std::size_t at = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string name = s_.substr(at, pos_ - at);
    static const std::map<std::string, ExprOp> fns = {
        {"exp", ExprOp::Exp}, {"log", ExprOp::Log}, {"sqrt", ExprOp::Sqrt},
        {"sin", ExprOp::Sin}, {"cos", ExprOp::Cos}};
    if (auto f = fns.find(name); f != fns.end() && peek() == '(') {
      ++pos_;
      Expr arg = expression(0);
      if (peek() != ')') throw ParseError("missing ')' after argument of " + name, pos_);
      ++pos_;
      if (f->second == ExprOp::Sqrt) return Expr::pow(arg, 1, 2);
      return Expr::unary(f->second, arg);
    }
    for (std::size_t i = 0; i < coords_.size(); ++i)
      if (coords_[i] == name) return Expr::var(static_cast<int>(i));
    if (auto it = sym_.find(name); it != sym_.end()) return it->second;
    if (name == "i") return Expr(cplx{0.0, 1.0});
    if (name == "pi") return Expr(std::numbers::pi);
    throw ParseError("unknown identifier '" + name + "'", at);
  }
};

}  // namespace

Expr parse(const std::string& text, const std::vector<std::string>& coords, const SymbolTable& symbols) {
  return Parser(text, coords, symbols).run();
}

// ---------------------------------------------------------------------------
// Printer

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // shortest representation that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    char b2[40];
    std::snprintf(b2, sizeof b2, "%.*g", prec, v);
    if (std::strtod(b2, nullptr) == v) return b2;
  }
  return buf;
}

struct Printed {
  std::string text;
  int prec;  // 1 additive, 2 multiplicative, 3 unary minus, 4 power, 5 atom
};

// Short forms for display: integers, halves, quarters, sqrt(2) multiples.
Printed short_real(double v) {
  auto whole = [](double x, long& k) {
    double r = std::round(x);
    if (std::abs(x - r) > 1e-12 * std::max(1.0, std::abs(x)) || std::abs(r) > 1e7) return false;
    k = static_cast<long>(r);
    return true;
  };
  const bool neg = v < 0;
  const double a = std::abs(v);
  long k = 0;
  std::string t;
  int prec = 5;
  if (whole(a, k)) t = std::to_string(k);
  else if (whole(2 * a, k)) t = std::to_string(k) + "/2", prec = 2;
  else if (whole(4 * a, k)) t = std::to_string(k) + "/4", prec = 2;
  else if (whole(a / std::sqrt(2.0), k)) t = k == 1 ? "sqrt2" : std::to_string(k) + "*sqrt2", prec = k == 1 ? 5 : 2;
  else if (whole(a * std::sqrt(2.0), k)) t = std::to_string(k) + "/sqrt2", prec = 2;
  else if (whole(a / std::numbers::pi, k)) t = k == 1 ? "pi" : std::to_string(k) + "*pi", prec = k == 1 ? 5 : 2;
  else {
    char b[40];
    std::snprintf(b, sizeof b, "%.6g", a);
    t = b;
  }
  if (neg) return {"-" + t, 3};
  return {t, prec};
}

Printed print_const(cplx v, bool shorten) {
  if (shorten) {
    if (std::abs(v.real()) < 1e-15 * std::max(1.0, std::abs(v.imag()))) v.real(0.0);
    if (std::abs(v.imag()) < 1e-15 * std::max(1.0, std::abs(v.real()))) v.imag(0.0);
  }
  const double re = v.real(), im = v.imag();
  auto fmt = [&](double x) { return shorten ? short_real(x).text : num(x); };
  if (im == 0.0) {
    if (shorten) return short_real(re);
    if (std::signbit(re)) return {"-" + num(-re), 3};
    return {num(re), 5};
  }
  std::string ims = fmt(std::abs(im)) + "*i";
  if (ims == "1*i") ims = "i";
  if (re == 0.0 && !std::signbit(re)) {
    if (im < 0) return {"-" + ims, 3};
    return {ims, ims == "i" ? 5 : 2};
  }
  std::string s = (std::signbit(re) ? "-" : "") + fmt(std::abs(re)) + (im < 0 ? " - " : " + ") + ims;
  return {s, 1};
}

Printed pr(const ExprNode& n, const std::vector<std::string>& coords, bool sh) {
  auto wrap = [](const Printed& p, bool paren) { return paren ? "(" + p.text + ")" : p.text; };
  switch (n.op) {
    case ExprOp::Const: return print_const(n.value, sh);
    case ExprOp::Var:
      return {n.var < static_cast<int>(coords.size()) ? coords[static_cast<std::size_t>(n.var)]
                                                        : "x" + std::to_string(n.var),
              5};
    case ExprOp::Neg: {
      Printed a = pr(*n.a, coords, sh);
      return {"-" + wrap(a, a.prec < 4), 3};
    }
    case ExprOp::Add:
    case ExprOp::Sub: {
      Printed a = pr(*n.a, coords, sh), b = pr(*n.b, coords, sh);
      // a leading '-' on the right operand would re-associate, so parenthesize it
      bool pb = b.prec <= 1 || b.prec == 3 || (n.op == ExprOp::Sub && b.prec <= 1);
      return {wrap(a, a.prec < 1) + (n.op == ExprOp::Add ? " + " : " - ") + wrap(b, pb), 1};
    }
    case ExprOp::Mul:
    case ExprOp::Div: {
      if (sh && n.op == ExprOp::Mul && n.a->op == ExprOp::Const &&
          ((n.a->value.imag() == 0 && n.a->value.real() < 0) || (n.a->value.real() == 0 && n.a->value.imag() < 0))) {
        ExprNode pos = n;
        auto c = std::make_shared<ExprNode>(*n.a);
        c->value = -c->value;
        pos.a = c;
        Printed r = pr(pos, coords, sh);
        return {"-" + (r.prec < 2 ? "(" + r.text + ")" : r.text), 3};
      }
      Printed a = pr(*n.a, coords, sh), b = pr(*n.b, coords, sh);
      bool pa = a.prec < 2 || a.prec == 3;
      bool pb = b.prec <= 2 || b.prec == 3;
      return {wrap(a, pa) + (n.op == ExprOp::Mul ? "*" : "/") + wrap(b, pb), 2};
    }
    case ExprOp::Pow: {
      Printed a = pr(*n.a, coords, sh);
      std::string e = n.q == 1 ? (n.p < 0 ? "(" + std::to_string(n.p) + ")" : std::to_string(n.p))
                               : "(" + std::to_string(n.p) + "/" + std::to_string(n.q) + ")";
      if (n.p == 1 && n.q == 2) return {"sqrt(" + a.text + ")", 5};
      return {wrap(a, a.prec < 5) + "^" + e, 4};
    }
    case ExprOp::Exp: return {"exp(" + pr(*n.a, coords, sh).text + ")", 5};
    case ExprOp::Log: return {"log(" + pr(*n.a, coords, sh).text + ")", 5};
    case ExprOp::Sqrt: return {"sqrt(" + pr(*n.a, coords, sh).text + ")", 5};
    case ExprOp::Sin: return {"sin(" + pr(*n.a, coords, sh).text + ")", 5};
    case ExprOp::Cos: return {"cos(" + pr(*n.a, coords, sh).text + ")", 5};
  }
  return {"?", 5};
}

}  // namespace

std::string print(const Expr& e, const std::vector<std::string>& coords) { return pr(e.node(), coords, false).text; }

std::string print_short(const Expr& e, const std::vector<std::string>& coords) {
  return pr(e.node(), coords, true).text;
}

std::string short_number(cplx v) { return print_const(v, true).text; }

// ---------------------------------------------------------------------------
// Evaluation

const Series& ExprEvaluator::eval(const Expr& e, int k) { return eval(e.ptr().get(), k); }

const Series& ExprEvaluator::eval(const ExprNode* n, int k) {
  if (auto it = cache_.find({n, k}); it != cache_.end()) return it->second;
  const int nv = nvars();
  Series r;
  switch (n->op) {
    case ExprOp::Const: r = Series::constant(nv, k, n->value); break;
    case ExprOp::Var:
      if (n->var >= nv) throw std::invalid_argument("expression references an undeclared coordinate");
      r = Series::variable(nv, k, n->var, x_[static_cast<std::size_t>(n->var)]);
      break;
    case ExprOp::Neg: r = -eval(n->a.get(), k); break;
    case ExprOp::Add: r = eval(n->a.get(), k) + eval(n->b.get(), k); break;
    case ExprOp::Sub: r = eval(n->a.get(), k) - eval(n->b.get(), k); break;
    case ExprOp::Mul: r = eval(n->a.get(), k) * eval(n->b.get(), k); break;
    case ExprOp::Div: r = divide(eval(n->a.get(), k), eval(n->b.get(), k)); break;
    case ExprOp::Exp: r = exp(eval(n->a.get(), k)); break;
    case ExprOp::Log: r = log(eval(n->a.get(), k)); break;
    case ExprOp::Sqrt: r = sqrt(eval(n->a.get(), k)); break;
    case ExprOp::Sin: r = sin(eval(n->a.get(), k)); break;
    case ExprOp::Cos: r = cos(eval(n->a.get(), k)); break;
    case ExprOp::Pow: r = pow_rational(eval(n->a.get(), k), n->p, n->q); break;
  }
  return cache_.emplace(Key{n, k}, std::move(r)).first->second;
}

cplx evaluate(const Expr& e, const std::vector<double>& point) {
  ExprEvaluator ev(point);
  return ev.eval(e, 0).value();
}

}  // namespace sqm
