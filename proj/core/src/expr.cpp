#include "rbdsdep/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"

namespace rbdsdep {
namespace {

using Op = Expr::Op;
using Var = Expr::Var;
using Node = Expr::Node;

constexpr std::size_t kMaxDepth = 256;

struct FunctionInfo {
  std::string_view name;
  Op op;
  int arity;
};

constexpr std::array<FunctionInfo, 11> kFunctions{{
    {"abs", Op::abs, 1},
    {"sign", Op::sign, 1},
    {"exp", Op::exp, 1},
    {"sin", Op::sin, 1},
    {"cos", Op::cos, 1},
    {"sqrt", Op::sqrt, 1},
    {"pos", Op::pos, 1},
    {"neg", Op::neg, 1},
    {"indicator_pos", Op::indicator_pos, 1},
    {"max", Op::max, 2},
    {"min", Op::min, 2},
}};

const FunctionInfo* find_function(std::string_view name) {
  for (const auto& info : kFunctions) {
    if (!info.name.empty() && info.name == name) return &info;
  }
  return nullptr;
}

std::string_view function_name(Op op) {
  for (const auto& info : kFunctions) {
    if (info.op == op && !info.name.empty()) return info.name;
  }
  return "?";
}

int arity(Op op) {
  switch (op) {
    case Op::constant:
    case Op::variable:
      return 0;
    case Op::add:
    case Op::subtract:
    case Op::multiply:
    case Op::divide:
    case Op::max:
    case Op::min:
      return 2;
    default:
      return 1;
  }
}

enum class Token { number, identifier, plus, minus, star, slash, lparen, rparen, comma, end };

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) { advance(); }

  std::vector<Node> run() {
    if (token_ == Token::end) throw ParseError("empty expression", 0);
    expression(0);
    if (token_ != Token::end) throw ParseError("unexpected trailing input", token_start_);
    return std::move(nodes_);
  }

 private:
  static bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    token_start_ = pos_;
    if (pos_ >= text_.size()) {
      token_ = Token::end;
      return;
    }
    const char c = text_[pos_];
    // U+00B7 middle dot as multiplication, U+2212 minus sign as minus.
    if (text_.substr(pos_, 2) == "\xC2\xB7") {
      pos_ += 2;
      token_ = Token::star;
      return;
    }
    if (text_.substr(pos_, 3) == "\xE2\x88\x92") {
      pos_ += 3;
      token_ = Token::minus;
      return;
    }
    switch (c) {
      case '+': ++pos_; token_ = Token::plus; return;
      case '-': ++pos_; token_ = Token::minus; return;
      case '*': ++pos_; token_ = Token::star; return;
      case '/': ++pos_; token_ = Token::slash; return;
      case '(': ++pos_; token_ = Token::lparen; return;
      case ')': ++pos_; token_ = Token::rparen; return;
      case ',': ++pos_; token_ = Token::comma; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t end = pos_;
      while (end < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.')) ++end;
      if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
        std::size_t exp = end + 1;
        if (exp < text_.size() && (text_[exp] == '+' || text_[exp] == '-')) ++exp;
        if (exp < text_.size() && std::isdigit(static_cast<unsigned char>(text_[exp]))) {
          end = exp;
          while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
        }
      }
      const char* first = text_.data() + pos_;
      const char* last = text_.data() + end;
      const auto [ptr, ec] = std::from_chars(first, last, number_);
      if (ec != std::errc{} || ptr != last) throw ParseError("malformed number", pos_);
      pos_ = end;
      token_ = Token::number;
      return;
    }
    if (is_ident_start(c)) {
      std::size_t end = pos_;
      while (end < text_.size() && is_ident_char(text_[end])) ++end;
      identifier_ = text_.substr(pos_, end - pos_);
      pos_ = end;
      token_ = Token::identifier;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  void expect(Token token, std::string_view what) {
    if (token_ != token) throw ParseError("expected " + std::string(what), token_start_);
    advance();
  }

  void emit(Op op, std::size_t offset) {
    Node node;
    node.op = op;
    node.offset = static_cast<std::uint32_t>(offset);
    nodes_.push_back(node);
  }

  static int infix_power(Token token) {
    switch (token) {
      case Token::plus:
      case Token::minus:
        return 10;
      case Token::star:
      case Token::slash:
        return 20;
      default:
        return -1;
    }
  }

  void expression(int min_power) {
    prefix();
    for (;;) {
      const int power = infix_power(token_);
      if (power < 0 || power < min_power) return;
      const Token op = token_;
      const std::size_t offset = token_start_;
      advance();
      expression(power + 1);
      emit(op == Token::plus ? Op::add : op == Token::minus ? Op::subtract : op == Token::star ? Op::multiply : Op::divide,
           offset);
    }
  }

  void prefix() {
    const std::size_t offset = token_start_;
    switch (token_) {
      case Token::number: {
        Node node;
        node.op = Op::constant;
        node.value = number_;
        node.offset = static_cast<std::uint32_t>(offset);
        nodes_.push_back(node);
        advance();
        return;
      }
      case Token::minus:
        advance();
        expression(30);
        emit(Op::negate, offset);
        return;
      case Token::lparen:
        advance();
        expression(0);
        expect(Token::rparen, "')'");
        return;
      case Token::identifier:
        identifier(offset);
        return;
      case Token::end:
        throw ParseError("unexpected end of expression", offset);
      default:
        throw ParseError("expected a number, variable, function or '('", offset);
    }
  }

  void identifier(std::size_t offset) {
    const std::string_view name = identifier_;
    advance();
    if (const FunctionInfo* fn = find_function(name)) {
      if (token_ != Token::lparen) throw ParseError("function '" + std::string(name) + "' needs '('", token_start_);
      advance();
      int count = 0;
      if (token_ != Token::rparen) {
        for (;;) {
          expression(0);
          ++count;
          if (token_ != Token::comma) break;
          advance();
        }
      }
      if (count != fn->arity) {
        throw ParseError("function '" + std::string(name) + "' takes " + std::to_string(fn->arity) +
                             " argument(s), got " + std::to_string(count),
                         offset);
      }
      expect(Token::rparen, "')'");
      emit(fn->op, offset);
      return;
    }
    Node node;
    node.op = Op::variable;
    node.offset = static_cast<std::uint32_t>(offset);
    if (name == "t") {
      node.var = Var::t;
    } else if (name == "y") {
      node.var = Var::y;
    } else if (name == "znorm") {
      node.var = Var::znorm;
    } else if (name == "unorm") {
      node.var = Var::unorm;
    } else if (name.size() >= 2 && (name[0] == 'z' || name[0] == 'u' || name[0] == 'w' || name[0] == 'n') &&
               std::all_of(name.begin() + 1, name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) &&
               name[1] != '0') {
      std::uint32_t index = 0;
      const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec != std::errc{} || index == 0 || index > 4096) throw ParseError("bad variable index in '" + std::string(name) + "'", offset);
      node.index = index - 1;
      node.var = name[0] == 'z' ? Var::z : name[0] == 'u' ? Var::u : name[0] == 'w' ? Var::w : Var::jumps;
    } else {
      if (token_ == Token::lparen) throw ParseError("unknown function '" + std::string(name) + "'", offset);
      throw ParseError("unknown identifier '" + std::string(name) + "'", offset);
    }
    nodes_.push_back(node);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t token_start_ = 0;
  Token token_ = Token::end;
  double number_ = 0.0;
  std::string_view identifier_;
  std::vector<Node> nodes_;
};

std::size_t program_depth(const std::vector<Node>& nodes) {
  std::size_t depth = 0;
  std::size_t peak = 0;
  for (const auto& node : nodes) {
    depth = depth + 1 - static_cast<std::size_t>(arity(node.op));
    peak = std::max(peak, depth);
  }
  return peak;
}

double lookup(std::span<const double> values, std::uint32_t index, char family) {
  if (index >= values.size()) {
    throw EvalError(std::string("variable ") + family + std::to_string(index + 1) + " is not bound");
  }
  return values[index];
}

double euclidean(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace

bool VariableUse::reads_any_z() const { return znorm || std::find(z.begin(), z.end(), true) != z.end(); }
bool VariableUse::reads_any_u() const { return unorm || std::find(u.begin(), u.end(), true) != u.end(); }
bool VariableUse::reads_any_w() const { return std::find(w.begin(), w.end(), true) != w.end(); }
bool VariableUse::reads_any_jumps() const { return std::find(jumps.begin(), jumps.end(), true) != jumps.end(); }

Expr::Expr() : Expr(std::vector<Node>{Node{}}, 1) {}

Expr::Expr(std::vector<Node> nodes, std::size_t depth) : nodes_(std::move(nodes)), depth_(depth) {}

Expr Expr::parse(std::string_view text) {
  auto nodes = Parser(text).run();
  const std::size_t depth = program_depth(nodes);
  if (depth > kMaxDepth) throw ParseError("expression nests too deeply", 0);
  return Expr(std::move(nodes), depth);
}

Expr Expr::constant(double value) {
  Node node;
  node.value = value;
  return Expr(std::vector<Node>{node}, 1);
}

Expr parse_expr(std::string_view text) { return Expr::parse(text); }

double Expr::evaluate(const Bindings& b) const {
  std::array<double, kMaxDepth> stack;
  std::size_t top = 0;
  for (const Node& node : nodes_) {
    double result = 0.0;
    switch (node.op) {
      case Op::constant:
        result = node.value;
        break;
      case Op::variable:
        switch (node.var) {
          case Var::t: result = b.t; break;
          case Var::y: result = b.y; break;
          case Var::z: result = lookup(b.z, node.index, 'z'); break;
          case Var::u: result = lookup(b.u, node.index, 'u'); break;
          case Var::w: result = lookup(b.w, node.index, 'w'); break;
          case Var::jumps: result = lookup(b.jumps, node.index, 'n'); break;
          case Var::znorm: result = euclidean(b.z); break;
          case Var::unorm: {
            if (b.lambda.size() != b.u.size()) throw EvalError("unorm needs one intensity per u component");
            double sum = 0.0;
            for (std::size_t k = 0; k < b.u.size(); ++k) sum += b.lambda[k] * b.u[k] * b.u[k];
            result = std::sqrt(sum);
            break;
          }
        }
        break;
      case Op::negate: result = -stack[--top]; break;
      case Op::abs: result = std::fabs(stack[--top]); break;
      case Op::sign: {
        const double x = stack[--top];
        result = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        break;
      }
      case Op::exp: result = std::exp(stack[--top]); break;
      case Op::sin: result = std::sin(stack[--top]); break;
      case Op::cos: result = std::cos(stack[--top]); break;
      case Op::sqrt: {
        const double x = stack[--top];
        if (x < 0.0) throw EvalError("sqrt of negative value " + io::format_double(x));
        result = std::sqrt(x);
        break;
      }
      case Op::pos: result = std::max(stack[--top], 0.0); break;
      case Op::neg: result = std::max(-stack[--top], 0.0); break;
      case Op::indicator_pos: result = stack[--top] > 0.0 ? 1.0 : 0.0; break;
      default: {
        const double rhs = stack[--top];
        const double lhs = stack[--top];
        switch (node.op) {
          case Op::add: result = lhs + rhs; break;
          case Op::subtract: result = lhs - rhs; break;
          case Op::multiply: result = lhs * rhs; break;
          case Op::divide:
            if (rhs == 0.0) throw EvalError("division by zero");
            result = lhs / rhs;
            break;
          case Op::max: result = std::max(lhs, rhs); break;
          case Op::min: result = std::min(lhs, rhs); break;
          default: break;
        }
        break;
      }
    }
    if (!std::isfinite(result)) throw EvalError("non-finite value in expression");
    stack[top++] = result;
  }
  return stack[0];
}

std::string Expr::to_string() const {
  std::vector<std::string> stack;
  for (const Node& node : nodes_) {
    switch (node.op) {
      case Op::constant: {
        // Negative constants only arise from Expr::constant; keep them re-parseable.
        std::string text = io::format_double(std::fabs(node.value));
        stack.push_back(node.value < 0.0 || std::signbit(node.value) ? "(-" + text + ")" : text);
        break;
      }
      case Op::variable:
        switch (node.var) {
          case Var::t: stack.emplace_back("t"); break;
          case Var::y: stack.emplace_back("y"); break;
          case Var::znorm: stack.emplace_back("znorm"); break;
          case Var::unorm: stack.emplace_back("unorm"); break;
          case Var::z: stack.push_back("z" + std::to_string(node.index + 1)); break;
          case Var::u: stack.push_back("u" + std::to_string(node.index + 1)); break;
          case Var::w: stack.push_back("w" + std::to_string(node.index + 1)); break;
          case Var::jumps: stack.push_back("n" + std::to_string(node.index + 1)); break;
        }
        break;
      case Op::negate: {
        std::string operand = std::move(stack.back());
        stack.back() = "-" + operand;
        break;
      }
      case Op::add:
      case Op::subtract:
      case Op::multiply:
      case Op::divide: {
        std::string rhs = std::move(stack.back());
        stack.pop_back();
        const char symbol = node.op == Op::add ? '+' : node.op == Op::subtract ? '-' : node.op == Op::multiply ? '*' : '/';
        stack.back() = "(" + stack.back() + " " + symbol + " " + rhs + ")";
        break;
      }
      case Op::max:
      case Op::min: {
        std::string rhs = std::move(stack.back());
        stack.pop_back();
        stack.back() = std::string(function_name(node.op)) + "(" + stack.back() + ", " + rhs + ")";
        break;
      }
      default:
        stack.back() = std::string(function_name(node.op)) + "(" + stack.back() + ")";
        break;
    }
  }
  std::string text = std::move(stack.back());
  // A top-level binary operation does not need its outer parentheses.
  if (!nodes_.empty()) {
    const Op root = nodes_.back().op;
    if ((root == Op::add || root == Op::subtract || root == Op::multiply || root == Op::divide) && text.size() >= 2) {
      text = text.substr(1, text.size() - 2);
    }
  }
  return text;
}

VariableUse Expr::uses() const {
  VariableUse use;
  auto mark = [](std::vector<bool>& family, std::uint32_t index) {
    if (family.size() <= index) family.resize(index + 1, false);
    family[index] = true;
  };
  for (const Node& node : nodes_) {
    if (node.op != Op::variable) continue;
    switch (node.var) {
      case Var::t: use.t = true; break;
      case Var::y: use.y = true; break;
      case Var::znorm: use.znorm = true; break;
      case Var::unorm: use.unorm = true; break;
      case Var::z: mark(use.z, node.index); break;
      case Var::u: mark(use.u, node.index); break;
      case Var::w: mark(use.w, node.index); break;
      case Var::jumps: mark(use.jumps, node.index); break;
    }
  }
  return use;
}

bool Expr::is_constant() const {
  return std::none_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.op == Op::variable; });
}

bool Expr::contains(Op op) const {
  return std::any_of(nodes_.begin(), nodes_.end(), [op](const Node& n) { return n.op == op; });
}

std::string_view expression_grammar() {
  return R"GRAMMAR(Expression grammar (coefficients f, g, pi, f_t, barrier S, terminal xi)

  expr    := term   { ("+" | "-") term }          left associative
  term    := unary  { ("*" | "/") unary }          left associative
  unary   := "-" unary | primary                   binds tighter than * and /
  primary := number | variable | call | "(" expr ")"
  call    := name "(" expr { "," expr } ")"
  number  := digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ]

Variables
  t            time
  y            value argument
  z1 .. zd     W-integrand components;  znorm = sqrt(z1^2 + ... + zd^2)
  u1 .. um     jump integrand per mark; unorm = sqrt(lambda1 u1^2 + ... + lambdam um^2)
  w1 .. wd     current value of the forward Brownian motion W
  n1 .. nm     number of jumps of each mark observed so far

Functions
  abs(x) sign(x) exp(x) sin(x) cos(x) sqrt(x)
  pos(x) = max(x, 0)   neg(x) = max(-x, 0)   indicator_pos(x) = 1 if x > 0 else 0
  max(a, b) min(a, b)

"*" may also be written as U+00B7 and "-" as U+2212. Unknown identifiers, wrong
argument counts, division by zero and sqrt of a negative number are errors.
Barriers may read t and w; terminals may read w and n (evaluated at t = T).
)GRAMMAR";
}

}  // namespace rbdsdep
