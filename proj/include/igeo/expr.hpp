#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>

namespace igeo::expr {

/*
 * Immutable expression trees over real scalars.
 *
 * Grammar (precedence high to low): ^ with a literal integer exponent,
 * unary minus, * /, binary + - (left-associative).  Atoms are decimal
 * constants, variables [a-zA-Z][a-zA-Z0-9_]*, parenthesised expressions and
 * the functions exp, log, sqrt, sin, cos.
 *
 * Construction folds literal arithmetic (and the cheap identities
 * x+0, x*1, x*0, x^0, x^1); no further simplification is guaranteed.
 */

enum class NodeKind { constant, variable, unary, binary, power };
enum class UnaryFn { negate, exp, log, sqrt, sin, cos };
enum class BinaryOp { add, sub, mul, div };

class Expression;
using ExprPtr = std::shared_ptr<const Expression>;

class Expression {
public:
  static ExprPtr constant(double value);
  static ExprPtr variable(std::string name);
  static ExprPtr unary(UnaryFn fn, ExprPtr operand);
  static ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
  static ExprPtr power(ExprPtr base, int exponent);

  NodeKind kind() const { return kind_; }
  double value() const { return value_; }               // constant
  const std::string& name() const { return name_; }     // variable
  UnaryFn fn() const { return fn_; }                    // unary
  BinaryOp op() const { return op_; }                   // binary
  int exponent() const { return exponent_; }            // power
  const ExprPtr& lhs() const { return lhs_; }           // unary operand too
  const ExprPtr& rhs() const { return rhs_; }

  bool structurally_equal(const Expression& other) const;

private:
  friend struct Builder;
  Expression() = default;

  NodeKind kind_ = NodeKind::constant;
  double value_ = 0.0;
  std::string name_;
  UnaryFn fn_ = UnaryFn::negate;
  BinaryOp op_ = BinaryOp::add;
  int exponent_ = 0;
  ExprPtr lhs_, rhs_;
};

using Bindings = std::map<std::string, double>;

/* Throws ParseError with the 0-based offset of the first offending character. */
ExprPtr parse(std::string_view text);

/* Throws EvalError on unbound variables, log/sqrt of a negative argument
 * (log also rejects 0) and division by zero. */
double evaluate(const Expression& e, const Bindings& bindings);

/* Symbolic partial derivative of the given order (1..3). */
ExprPtr derivative(const ExprPtr& e, const std::string& var, int order = 1);

/* Canonical text form; parse(serialize(e)) is structurally equal to e. */
std::string serialize(const Expression& e);

std::set<std::string> variables(const Expression& e);

}  // namespace igeo::expr
