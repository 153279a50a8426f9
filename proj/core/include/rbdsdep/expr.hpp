#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rbdsdep {

/// Values bound to the variables of an expression.
///
/// z, u, w and jumps are 0-based views; the DSL names them z1.., u1.., w1.., n1.. .
/// `lambda` holds the mark intensities and is only read by `unorm`.
struct Bindings {
  double t = 0.0;
  double y = 0.0;
  std::span<const double> z;
  std::span<const double> u;
  std::span<const double> w;
  std::span<const double> jumps;
  std::span<const double> lambda;
};

/// Which variables an expression reads. Indexed families record the largest index used.
struct VariableUse {
  bool t = false;
  bool y = false;
  bool znorm = false;
  bool unorm = false;
  std::vector<bool> z;
  std::vector<bool> u;
  std::vector<bool> w;
  std::vector<bool> jumps;

  bool reads_z(std::size_t k) const { return znorm || (k < z.size() && z[k]); }
  bool reads_u(std::size_t k) const { return unorm || (k < u.size() && u[k]); }
  bool reads_any_z() const;
  bool reads_any_u() const;
  bool reads_any_w() const;
  bool reads_any_jumps() const;
};

/// Immutable arithmetic expression over
///   t, y, z1..zd, u1..um, w1..wd, n1..nm, znorm, unorm
/// with + - * / (binary), unary -, and the call-style functions
///   abs sign exp sin cos sqrt pos neg indicator_pos (one argument), max min (two).
///
/// Stored as a postfix program; evaluation is a stack machine and is reentrant.
class Expr {
 public:
  enum class Op : std::uint8_t {
    constant, variable, negate, add, subtract, multiply, divide,
    abs, sign, exp, sin, cos, sqrt, pos, neg, indicator_pos, max, min,
  };
  enum class Var : std::uint8_t { t, y, z, u, w, jumps, znorm, unorm };

  struct Node {
    Op op = Op::constant;
    double value = 0.0;
    Var var = Var::t;
    std::uint32_t index = 0;  // 0-based index for z/u/w/jumps
    std::uint32_t offset = 0;  // byte offset in the source text; not part of identity

    friend bool operator==(const Node& a, const Node& b) {
      return a.op == b.op && (a.op != Op::constant || a.value == b.value) &&
             (a.op != Op::variable || (a.var == b.var && a.index == b.index));
    }
  };

  /// The constant 0.
  Expr();

  /// Throws ParseError (with byte offset) on lexical errors, unknown identifiers,
  /// wrong argument counts and malformed syntax.
  static Expr parse(std::string_view text);
  static Expr constant(double value);

  /// Throws EvalError on division by zero, sqrt of a negative, a non-finite result or a
  /// variable index that is not bound.
  double evaluate(const Bindings& bindings) const;

  /// Canonical text: binary operations fully parenthesised, numbers in shortest round-trip form.
  /// parse(to_string()) reproduces the same program.
  std::string to_string() const;

  VariableUse uses() const;
  bool is_constant() const;
  bool contains(Op op) const;
  std::span<const Node> nodes() const noexcept { return nodes_; }

  friend bool operator==(const Expr&, const Expr&) = default;

 private:
  explicit Expr(std::vector<Node> nodes, std::size_t depth);

  std::vector<Node> nodes_;
  std::size_t depth_ = 1;
};

Expr parse_expr(std::string_view text);

/// Human-readable description of the grammar, printed by `rbdsdep grammar`.
std::string_view expression_grammar();

}  // namespace rbdsdep
