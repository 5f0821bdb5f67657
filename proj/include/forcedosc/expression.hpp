#pragma once

// Small arithmetic expression language used for user-supplied scalar fields.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name '(' expr ')' | name ('[' int (',' int)* ']')? | '(' expr ')'
//
// Functions: sin cos tan exp log ln sqrt abs tanh.  Constants: pi, e.
// Variables are bound to slots at parse time through a resolver, so
// evaluation is a plain walk over a node array with no name lookups.

#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forcedosc/errors.hpp"

namespace forcedosc {

struct VariableRef {
  std::string name;
  std::vector<int> indices;  ///< contents of an optional [i, j] suffix
};

using VariableResolver = std::function<std::optional<int>(const VariableRef&)>;

class Expression {
 public:
  static Expression parse(std::string_view text, const VariableResolver& resolver) {
    Parser parser{text, resolver, {}};
    Expression out;
    out.source_ = std::string(text);
    const int root = parser.parse_expr(out.nodes_);
    parser.skip_ws();
    if (parser.pos < text.size()) {
      parser.fail("unexpected trailing input");
    }
    out.root_ = root;
    for (const auto& node : out.nodes_) {
      if (node.op == Op::variable) out.slot_count_ = std::max(out.slot_count_, node.slot + 1);
    }
    return out;
  }

  [[nodiscard]] double eval(std::span<const double> slots) const {
    if (static_cast<int>(slots.size()) < slot_count_) {
      throw ConfigError("expression '" + source_ + "' needs " + std::to_string(slot_count_) +
                        " variable slots");
    }
    return eval_node(root_, slots);
  }

  [[nodiscard]] const std::string& source() const { return source_; }
  [[nodiscard]] bool is_constant() const { return slot_count_ == 0; }

 private:
  enum class Op { constant, variable, add, sub, mul, div, pow, neg, call };
  enum class Fn { sin, cos, tan, exp, log, sqrt, abs, tanh };

  struct Node {
    Op op = Op::constant;
    double value = 0.0;
    int slot = -1;
    int lhs = -1;
    int rhs = -1;
    Fn fn = Fn::sin;
  };

  struct Parser {
    std::string_view text;
    const VariableResolver& resolver;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
      throw ConfigError("expression parse error at column " + std::to_string(pos + 1) + " in '" +
                        std::string(text) + "': " + what);
    }

    void skip_ws() {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool accept(char c) {
      skip_ws();
      if (pos < text.size() && text[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    void expect(char c) {
      if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    static int push(std::vector<Node>& nodes, Node node) {
      nodes.push_back(node);
      return static_cast<int>(nodes.size()) - 1;
    }

    int parse_expr(std::vector<Node>& nodes) {
      int lhs = parse_term(nodes);
      for (;;) {
        if (accept('+')) {
          lhs = push(nodes, {Op::add, 0.0, -1, lhs, parse_term(nodes)});
        } else if (accept('-')) {
          lhs = push(nodes, {Op::sub, 0.0, -1, lhs, parse_term(nodes)});
        } else {
          return lhs;
        }
      }
    }

    int parse_term(std::vector<Node>& nodes) {
      int lhs = parse_unary(nodes);
      for (;;) {
        if (accept('*')) {
          lhs = push(nodes, {Op::mul, 0.0, -1, lhs, parse_unary(nodes)});
        } else if (accept('/')) {
          lhs = push(nodes, {Op::div, 0.0, -1, lhs, parse_unary(nodes)});
        } else {
          return lhs;
        }
      }
    }

    int parse_unary(std::vector<Node>& nodes) {
      if (accept('-')) return push(nodes, {Op::neg, 0.0, -1, parse_unary(nodes)});
      if (accept('+')) return parse_unary(nodes);
      return parse_power(nodes);
    }

    int parse_power(std::vector<Node>& nodes) {
      const int base = parse_primary(nodes);
      if (accept('^')) return push(nodes, {Op::pow, 0.0, -1, base, parse_unary(nodes)});
      return base;
    }

    int parse_int() {
      skip_ws();
      const std::size_t start = pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
      if (start == pos) fail("expected integer index");
      return std::stoi(std::string(text.substr(start, pos - start)));
    }

    int parse_primary(std::vector<Node>& nodes) {
      skip_ws();
      if (pos >= text.size()) fail("unexpected end of input");
      const char c = text[pos];
      if (c == '(') {
        ++pos;
        const int inner = parse_expr(nodes);
        expect(')');
        return inner;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const std::string rest(text.substr(pos));
        std::size_t used = 0;
        double value = 0.0;
        try {
          value = std::stod(rest, &used);
        } catch (const std::exception&) {
          fail("malformed number");
        }
        pos += used;
        return push(nodes, {Op::constant, value});
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
          ++pos;
        }
        const std::string name(text.substr(start, pos - start));
        if (accept('(')) {
          Node call{Op::call};
          call.fn = function_named(name);
          call.lhs = parse_expr(nodes);
          expect(')');
          return push(nodes, call);
        }
        VariableRef ref{name, {}};
        if (accept('[')) {
          ref.indices.push_back(parse_int());
          while (accept(',')) ref.indices.push_back(parse_int());
          expect(']');
        }
        if (ref.indices.empty()) {
          if (name == "pi") return push(nodes, {Op::constant, std::numbers::pi});
          if (name == "e") return push(nodes, {Op::constant, std::numbers::e});
        }
        const auto slot = resolver ? resolver(ref) : std::nullopt;
        if (!slot) fail("unknown variable '" + name + "'");
        Node var{Op::variable};
        var.slot = *slot;
        return push(nodes, var);
      }
      fail(std::string("unexpected character '") + c + "'");
    }

    Fn function_named(const std::string& name) const {
      if (name == "sin") return Fn::sin;
      if (name == "cos") return Fn::cos;
      if (name == "tan") return Fn::tan;
      if (name == "exp") return Fn::exp;
      if (name == "log" || name == "ln") return Fn::log;
      if (name == "sqrt") return Fn::sqrt;
      if (name == "abs") return Fn::abs;
      if (name == "tanh") return Fn::tanh;
      fail("unknown function '" + name + "'");
    }
  };

  [[nodiscard]] double eval_node(int index, std::span<const double> slots) const {
    const Node& node = nodes_[static_cast<std::size_t>(index)];
    switch (node.op) {
      case Op::constant:
        return node.value;
      case Op::variable:
        return slots[static_cast<std::size_t>(node.slot)];
      case Op::add:
        return eval_node(node.lhs, slots) + eval_node(node.rhs, slots);
      case Op::sub:
        return eval_node(node.lhs, slots) - eval_node(node.rhs, slots);
      case Op::mul:
        return eval_node(node.lhs, slots) * eval_node(node.rhs, slots);
      case Op::div:
        return eval_node(node.lhs, slots) / eval_node(node.rhs, slots);
      case Op::pow:
        return std::pow(eval_node(node.lhs, slots), eval_node(node.rhs, slots));
      case Op::neg:
        return -eval_node(node.lhs, slots);
      case Op::call:
        break;
    }
    const double x = eval_node(node.lhs, slots);
    switch (node.fn) {
      case Fn::sin:
        return std::sin(x);
      case Fn::cos:
        return std::cos(x);
      case Fn::tan:
        return std::tan(x);
      case Fn::exp:
        return std::exp(x);
      case Fn::log:
        return std::log(x);
      case Fn::sqrt:
        return std::sqrt(x);
      case Fn::abs:
        return std::abs(x);
      case Fn::tanh:
        return std::tanh(x);
    }
    return x;
  }

  std::vector<Node> nodes_;
  int root_ = -1;
  int slot_count_ = 0;
  std::string source_;
};

/// Evaluates a parameter that may be a plain number or a constant expression
/// such as "ln(2)".
inline double evaluate_constant(std::string_view text) {
  const auto expr = Expression::parse(text, nullptr);
  return expr.eval({});
}

}  // namespace forcedosc
