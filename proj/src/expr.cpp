#include "igeo/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

#include "igeo/errors.hpp"

namespace igeo::expr {

namespace {

bool is_const(const ExprPtr& e, double v) {
  return e->kind() == NodeKind::constant && e->value() == v;
}

}  // namespace

/* Factories need private access; go through a thin struct instead. */
struct Builder {
  static std::shared_ptr<Expression> fresh() {
    return std::shared_ptr<Expression>(new Expression());
  }
  static void set_kind(Expression& e, NodeKind k) { e.kind_ = k; }
  static void set_value(Expression& e, double v) { e.value_ = v; }
  static void set_name(Expression& e, std::string n) { e.name_ = std::move(n); }
  static void set_fn(Expression& e, UnaryFn f) { e.fn_ = f; }
  static void set_op(Expression& e, BinaryOp o) { e.op_ = o; }
  static void set_exponent(Expression& e, int k) { e.exponent_ = k; }
  static void set_children(Expression& e, ExprPtr l, ExprPtr r) {
    e.lhs_ = std::move(l);
    e.rhs_ = std::move(r);
  }
};

ExprPtr Expression::constant(double value) {
  auto n = Builder::fresh();
  Builder::set_kind(*n, NodeKind::constant);
  Builder::set_value(*n, value);
  return n;
}

ExprPtr Expression::variable(std::string name) {
  auto n = Builder::fresh();
  Builder::set_kind(*n, NodeKind::variable);
  Builder::set_name(*n, std::move(name));
  return n;
}

ExprPtr Expression::unary(UnaryFn fn, ExprPtr operand) {
  if (operand->kind() == NodeKind::constant) {
    const double v = operand->value();
    double folded = 0.0;
    bool ok = true;
    switch (fn) {
      case UnaryFn::negate: folded = -v; break;
      case UnaryFn::exp: folded = std::exp(v); ok = std::isfinite(folded); break;
      case UnaryFn::log: folded = std::log(v); ok = v > 0.0; break;
      case UnaryFn::sqrt: folded = std::sqrt(v); ok = v >= 0.0; break;
      case UnaryFn::sin: folded = std::sin(v); break;
      case UnaryFn::cos: folded = std::cos(v); break;
    }
    if (ok && std::isfinite(folded)) return constant(folded);
  }
  if (fn == UnaryFn::negate && operand->kind() == NodeKind::unary &&
      operand->fn() == UnaryFn::negate)
    return operand->lhs();
  auto n = Builder::fresh();
  Builder::set_kind(*n, NodeKind::unary);
  Builder::set_fn(*n, fn);
  Builder::set_children(*n, std::move(operand), nullptr);
  return n;
}

ExprPtr Expression::binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  const bool lc = lhs->kind() == NodeKind::constant;
  const bool rc = rhs->kind() == NodeKind::constant;
  if (lc && rc) {
    const double a = lhs->value(), b = rhs->value();
    switch (op) {
      case BinaryOp::add: return constant(a + b);
      case BinaryOp::sub: return constant(a - b);
      case BinaryOp::mul: return constant(a * b);
      case BinaryOp::div:
        if (b != 0.0) return constant(a / b);
        break;  // keep the node; evaluation reports division by zero
    }
  }
  switch (op) {
    case BinaryOp::add:
      if (is_const(lhs, 0.0)) return rhs;
      if (is_const(rhs, 0.0)) return lhs;
      break;
    case BinaryOp::sub:
      if (is_const(rhs, 0.0)) return lhs;
      if (is_const(lhs, 0.0)) return unary(UnaryFn::negate, rhs);
      break;
    case BinaryOp::mul:
      if (is_const(lhs, 1.0)) return rhs;
      if (is_const(rhs, 1.0)) return lhs;
      if (is_const(lhs, 0.0) || is_const(rhs, 0.0)) return constant(0.0);
      break;
    case BinaryOp::div:
      if (is_const(rhs, 1.0)) return lhs;
      break;
  }
  auto n = Builder::fresh();
  Builder::set_kind(*n, NodeKind::binary);
  Builder::set_op(*n, op);
  Builder::set_children(*n, std::move(lhs), std::move(rhs));
  return n;
}

ExprPtr Expression::power(ExprPtr base, int exponent) {
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  if (base->kind() == NodeKind::constant) {
    const double v = base->value();
    if (!(v == 0.0 && exponent < 0)) {
      double folded = std::pow(v, static_cast<double>(exponent));
      if (std::isfinite(folded)) return constant(folded);
    }
  }
  auto n = Builder::fresh();
  Builder::set_kind(*n, NodeKind::power);
  Builder::set_exponent(*n, exponent);
  Builder::set_children(*n, std::move(base), nullptr);
  return n;
}

bool Expression::structurally_equal(const Expression& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case NodeKind::constant: return value_ == other.value_;
    case NodeKind::variable: return name_ == other.name_;
    case NodeKind::unary:
      return fn_ == other.fn_ && lhs_->structurally_equal(*other.lhs_);
    case NodeKind::binary:
      return op_ == other.op_ && lhs_->structurally_equal(*other.lhs_) &&
             rhs_->structurally_equal(*other.rhs_);
    case NodeKind::power:
      return exponent_ == other.exponent_ &&
             lhs_->structurally_equal(*other.lhs_);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Lexer and recursive-descent parser
// ---------------------------------------------------------------------------

namespace {

enum class TokKind { number, ident, symbol, end };

struct Token {
  TokKind kind = TokKind::end;
  double value = 0.0;
  bool integral = false;  // number written as bare digits
  std::string text;
  char symbol = 0;
  std::size_t offset = 0;
};

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_ws();
      Token t = next();
      out.push_back(t);
      if (t.kind == TokKind::end) break;
    }
    return out;
  }

private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  Token next() {
    Token t;
    t.offset = pos_;
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return ident();
    switch (c) {
      case '+': case '-': case '*': case '/': case '^': case '(': case ')':
        t.kind = TokKind::symbol;
        t.symbol = c;
        ++pos_;
        return t;
      default:
        throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
    }
  }

  Token number() {
    Token t;
    t.kind = TokKind::number;
    t.offset = pos_;
    const std::size_t start = pos_;
    bool digits = false, dot = false, expo = false;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
      digits = true;
    }
    if (pos_ < text_.size() && text_[pos_] == '.') {
      dot = true;
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        digits = true;
      }
    }
    if (!digits) throw ParseError("malformed number", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        expo = true;
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
          ++pos_;
      }
    }
    const std::string tok(text_.substr(start, pos_ - start));
    t.value = std::strtod(tok.c_str(), nullptr);
    t.integral = !dot && !expo;
    t.text = tok;
    return t;
  }

  Token ident() {
    Token t;
    t.kind = TokKind::ident;
    t.offset = pos_;
    const std::size_t start = pos_;
    ++pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    t.text = std::string(text_.substr(start, pos_ - start));
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ExprPtr run() {
    ExprPtr e = expression();
    if (!at_end())
      throw ParseError("unexpected token '" + describe(peek()) + "'", peek().offset);
    return e;
  }

private:
  const Token& peek() const { return toks_[idx_]; }
  const Token& advance() { return toks_[idx_++]; }
  bool at_end() const { return peek().kind == TokKind::end; }

  bool match_symbol(char c) {
    if (peek().kind == TokKind::symbol && peek().symbol == c) {
      ++idx_;
      return true;
    }
    return false;
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case TokKind::number: return t.text;
      case TokKind::ident: return t.text;
      case TokKind::symbol: return std::string(1, t.symbol);
      case TokKind::end: return "end of input";
    }
    return "?";
  }

  ExprPtr expression() {
    ExprPtr e = term();
    while (true) {
      if (match_symbol('+'))
        e = Expression::binary(BinaryOp::add, e, term());
      else if (match_symbol('-'))
        e = Expression::binary(BinaryOp::sub, e, term());
      else
        return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = factor();
    while (true) {
      if (match_symbol('*'))
        e = Expression::binary(BinaryOp::mul, e, factor());
      else if (match_symbol('/'))
        e = Expression::binary(BinaryOp::div, e, factor());
      else
        return e;
    }
  }

  ExprPtr factor() {
    if (match_symbol('-')) return Expression::unary(UnaryFn::negate, factor());
    return power();
  }

  ExprPtr power() {
    ExprPtr e = atom();
    while (match_symbol('^')) e = Expression::power(e, exponent_literal());
    return e;
  }

  int exponent_literal() {
    int sign = 1;
    if (match_symbol('-')) sign = -1;
    else if (match_symbol('+')) sign = 1;
    if (peek().kind != TokKind::number || !peek().integral)
      throw ParseError("exponent of ^ must be a literal integer", peek().offset);
    const Token& t = advance();
    if (t.value > 1e6)
      throw ParseError("exponent out of range", t.offset);
    return sign * static_cast<int>(t.value);
  }

  ExprPtr atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::number:
        advance();
        return Expression::constant(t.value);
      case TokKind::ident: {
        advance();
        if (match_symbol('(')) {
          UnaryFn fn;
          if (t.text == "exp") fn = UnaryFn::exp;
          else if (t.text == "log") fn = UnaryFn::log;
          else if (t.text == "sqrt") fn = UnaryFn::sqrt;
          else if (t.text == "sin") fn = UnaryFn::sin;
          else if (t.text == "cos") fn = UnaryFn::cos;
          else throw ParseError("unknown function '" + t.text + "'", t.offset);
          ExprPtr arg = expression();
          if (!match_symbol(')'))
            throw ParseError("expected ')'", peek().offset);
          return Expression::unary(fn, arg);
        }
        return Expression::variable(t.text);
      }
      case TokKind::symbol:
        if (t.symbol == '(') {
          advance();
          ExprPtr e = expression();
          if (!match_symbol(')'))
            throw ParseError("expected ')'", peek().offset);
          return e;
        }
        throw ParseError("unexpected token '" + describe(t) + "'", t.offset);
      case TokKind::end:
        throw ParseError("unexpected end of input", t.offset);
    }
    throw ParseError("unexpected token", t.offset);
  }

  std::vector<Token> toks_;
  std::size_t idx_ = 0;
};

}  // namespace

ExprPtr parse(std::string_view text) { return Parser(Lexer(text).run()).run(); }

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double evaluate(const Expression& e, const Bindings& bindings) {
  switch (e.kind()) {
    case NodeKind::constant:
      return e.value();
    case NodeKind::variable: {
      auto it = bindings.find(e.name());
      if (it == bindings.end())
        throw EvalError("unbound variable '" + e.name() + "'");
      return it->second;
    }
    case NodeKind::unary: {
      const double v = evaluate(*e.lhs(), bindings);
      switch (e.fn()) {
        case UnaryFn::negate: return -v;
        case UnaryFn::exp: return std::exp(v);
        case UnaryFn::log:
          if (v <= 0.0) throw EvalError("log of non-positive argument");
          return std::log(v);
        case UnaryFn::sqrt:
          if (v < 0.0) throw EvalError("sqrt of negative argument");
          return std::sqrt(v);
        case UnaryFn::sin: return std::sin(v);
        case UnaryFn::cos: return std::cos(v);
      }
      break;
    }
    case NodeKind::binary: {
      const double a = evaluate(*e.lhs(), bindings);
      const double b = evaluate(*e.rhs(), bindings);
      switch (e.op()) {
        case BinaryOp::add: return a + b;
        case BinaryOp::sub: return a - b;
        case BinaryOp::mul: return a * b;
        case BinaryOp::div:
          if (b == 0.0) throw EvalError("division by zero");
          return a / b;
      }
      break;
    }
    case NodeKind::power: {
      const double base = evaluate(*e.lhs(), bindings);
      if (base == 0.0 && e.exponent() < 0)
        throw EvalError("division by zero");
      return std::pow(base, static_cast<double>(e.exponent()));
    }
  }
  throw EvalError("malformed expression node");
}

// ---------------------------------------------------------------------------
// Symbolic differentiation
// ---------------------------------------------------------------------------

namespace {

ExprPtr d1(const ExprPtr& e, const std::string& var) {
  using E = Expression;
  switch (e->kind()) {
    case NodeKind::constant:
      return E::constant(0.0);
    case NodeKind::variable:
      return E::constant(e->name() == var ? 1.0 : 0.0);
    case NodeKind::unary: {
      ExprPtr du = d1(e->lhs(), var);
      const ExprPtr& u = e->lhs();
      switch (e->fn()) {
        case UnaryFn::negate:
          return E::unary(UnaryFn::negate, du);
        case UnaryFn::exp:
          return E::binary(BinaryOp::mul, E::unary(UnaryFn::exp, u), du);
        case UnaryFn::log:
          return E::binary(BinaryOp::div, du, u);
        case UnaryFn::sqrt:
          return E::binary(
              BinaryOp::div, du,
              E::binary(BinaryOp::mul, E::constant(2.0), E::unary(UnaryFn::sqrt, u)));
        case UnaryFn::sin:
          return E::binary(BinaryOp::mul, E::unary(UnaryFn::cos, u), du);
        case UnaryFn::cos:
          return E::unary(UnaryFn::negate,
                          E::binary(BinaryOp::mul, E::unary(UnaryFn::sin, u), du));
      }
      break;
    }
    case NodeKind::binary: {
      const ExprPtr& u = e->lhs();
      const ExprPtr& v = e->rhs();
      ExprPtr du = d1(u, var), dv = d1(v, var);
      switch (e->op()) {
        case BinaryOp::add:
          return E::binary(BinaryOp::add, du, dv);
        case BinaryOp::sub:
          return E::binary(BinaryOp::sub, du, dv);
        case BinaryOp::mul:
          return E::binary(BinaryOp::add, E::binary(BinaryOp::mul, du, v),
                           E::binary(BinaryOp::mul, u, dv));
        case BinaryOp::div:
          return E::binary(BinaryOp::div,
                           E::binary(BinaryOp::sub, E::binary(BinaryOp::mul, du, v),
                                     E::binary(BinaryOp::mul, u, dv)),
                           E::power(v, 2));
      }
      break;
    }
    case NodeKind::power: {
      const ExprPtr& u = e->lhs();
      const int k = e->exponent();
      ExprPtr du = d1(u, var);
      return E::binary(
          BinaryOp::mul, E::constant(static_cast<double>(k)),
          E::binary(BinaryOp::mul, E::power(u, k - 1), du));
    }
  }
  throw EvalError("malformed expression node");
}

}  // namespace

ExprPtr derivative(const ExprPtr& e, const std::string& var, int order) {
  if (order < 1 || order > 3)
    throw ValidationError("derivative order must be 1, 2 or 3");
  ExprPtr d = e;
  for (int i = 0; i < order; ++i) d = d1(d, var);
  return d;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

int precedence(const Expression& e) {
  switch (e.kind()) {
    case NodeKind::binary:
      return (e.op() == BinaryOp::add || e.op() == BinaryOp::sub) ? 1 : 2;
    case NodeKind::unary:
      return e.fn() == UnaryFn::negate ? 3 : 5;
    case NodeKind::power:
      return 4;
    case NodeKind::constant:
      return e.value() < 0.0 ? 3 : 5;  // negative literals print as -c
    case NodeKind::variable:
      return 5;
  }
  return 5;
}

std::string format_constant(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write(const Expression& e, int min_prec, std::string& out) {
  const int prec = precedence(e);
  const bool parens = prec < min_prec;
  if (parens) out += '(';
  switch (e.kind()) {
    case NodeKind::constant:
      out += format_constant(e.value());
      break;
    case NodeKind::variable:
      out += e.name();
      break;
    case NodeKind::unary:
      switch (e.fn()) {
        case UnaryFn::negate:
          out += '-';
          write(*e.lhs(), 4, out);
          break;
        case UnaryFn::exp: out += "exp("; write(*e.lhs(), 0, out); out += ')'; break;
        case UnaryFn::log: out += "log("; write(*e.lhs(), 0, out); out += ')'; break;
        case UnaryFn::sqrt: out += "sqrt("; write(*e.lhs(), 0, out); out += ')'; break;
        case UnaryFn::sin: out += "sin("; write(*e.lhs(), 0, out); out += ')'; break;
        case UnaryFn::cos: out += "cos("; write(*e.lhs(), 0, out); out += ')'; break;
      }
      break;
    case NodeKind::binary: {
      const char* sym = nullptr;
      switch (e.op()) {
        case BinaryOp::add: sym = "+"; break;
        case BinaryOp::sub: sym = "-"; break;
        case BinaryOp::mul: sym = "*"; break;
        case BinaryOp::div: sym = "/"; break;
      }
      write(*e.lhs(), prec, out);
      out += sym;
      write(*e.rhs(), prec + 1, out);
      break;
    }
    case NodeKind::power:
      write(*e.lhs(), 5, out);
      out += '^';
      out += std::to_string(e.exponent());
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string serialize(const Expression& e) {
  std::string out;
  write(e, 0, out);
  return out;
}

std::set<std::string> variables(const Expression& e) {
  std::set<std::string> vars;
  auto walk = [&](auto&& self, const Expression& n) -> void {
    switch (n.kind()) {
      case NodeKind::variable: vars.insert(n.name()); break;
      case NodeKind::unary:
      case NodeKind::power: self(self, *n.lhs()); break;
      case NodeKind::binary:
        self(self, *n.lhs());
        self(self, *n.rhs());
        break;
      case NodeKind::constant: break;
    }
  };
  walk(walk, e);
  return vars;
}

}  // namespace igeo::expr
