#pragma once

// Arithmetic expressions in chart coordinates x1, x2, used by custom
// manifold specs for metric entries and transition maps.
//
// Grammar:  expr := term (('+'|'-') term)*
//           term := unary (('*'|'/') unary)*
//           unary := ('-'|'+') unary | power
//           power := atom ('^' unary)?
//           atom := number | name | name '(' expr ')' | '(' expr ')'

#include "geonet/core.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace geonet {

class Expression {
 public:
  Expression() = default;

  static Expression parse(const std::string& text) {
    Parser p{text, 0};
    Expression e;
    e.text_ = text;
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.error("unexpected trailing input");
    return e;
  }

  double operator()(const Vec2& x) const { return eval(*root_, x); }
  const std::string& text() const { return text_; }
  bool empty() const { return !root_; }

 private:
  enum class Op { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Call };
  enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Sinh, Cosh, Tanh, Atan };

  struct Node {
    Op op = Op::Num;
    double value = 0.0;
    int var = 0;
    Fn fn = Fn::Sin;
    std::shared_ptr<const Node> a, b;
  };
  using NodePtr = std::shared_ptr<const Node>;

  struct Parser {
    const std::string& s;
    std::size_t pos;

    [[noreturn]] void error(const std::string& what) const {
      fail(ErrorKind::InvalidInput, "riemann::expression",
           what + " at offset " + std::to_string(pos) + " in \"" + s + "\"");
    }
    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    static NodePtr binary(Op op, NodePtr a, NodePtr b) {
      auto n = std::make_shared<Node>();
      n->op = op;
      n->a = std::move(a);
      n->b = std::move(b);
      return n;
    }
    NodePtr parse_expr() {
      NodePtr lhs = parse_term();
      for (;;) {
        if (eat('+')) lhs = binary(Op::Add, lhs, parse_term());
        else if (eat('-')) lhs = binary(Op::Sub, lhs, parse_term());
        else return lhs;
      }
    }
    NodePtr parse_term() {
      NodePtr lhs = parse_unary();
      for (;;) {
        if (eat('*')) lhs = binary(Op::Mul, lhs, parse_unary());
        else if (eat('/')) lhs = binary(Op::Div, lhs, parse_unary());
        else return lhs;
      }
    }
    NodePtr parse_unary() {
      if (eat('-')) {
        auto n = std::make_shared<Node>();
        n->op = Op::Neg;
        n->a = parse_unary();
        return n;
      }
      if (eat('+')) return parse_unary();
      return parse_power();
    }
    NodePtr parse_power() {
      NodePtr base = parse_atom();
      if (eat('^')) return binary(Op::Pow, base, parse_unary());
      return base;
    }
    NodePtr parse_atom() {
      skip_ws();
      if (pos >= s.size()) error("unexpected end of expression");
      if (eat('(')) {
        NodePtr e = parse_expr();
        if (!eat(')')) error("expected ')'");
        return e;
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(s.substr(pos), &used);
        } catch (const std::exception&) {
          error("bad number");
        }
        pos += used;
        auto n = std::make_shared<Node>();
        n->op = Op::Num;
        n->value = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        const std::string name = s.substr(start, pos - start);
        auto n = std::make_shared<Node>();
        if (name == "x1" || name == "x2") {
          n->op = Op::Var;
          n->var = name == "x1" ? 0 : 1;
          return n;
        }
        if (name == "pi") {
          n->op = Op::Num;
          n->value = kPi;
          return n;
        }
        static const std::pair<const char*, Fn> fns[] = {
            {"sin", Fn::Sin},   {"cos", Fn::Cos},   {"tan", Fn::Tan},   {"exp", Fn::Exp},
            {"log", Fn::Log},   {"sqrt", Fn::Sqrt}, {"abs", Fn::Abs},   {"sinh", Fn::Sinh},
            {"cosh", Fn::Cosh}, {"tanh", Fn::Tanh}, {"atan", Fn::Atan}};
        for (const auto& [fname, fn] : fns) {
          if (name == fname) {
            if (!eat('(')) error("expected '(' after " + name);
            n->op = Op::Call;
            n->fn = fn;
            n->a = parse_expr();
            if (!eat(')')) error("expected ')'");
            return n;
          }
        }
        error("unknown identifier '" + name + "'");
      }
      error(std::string("unexpected character '") + c + "'");
    }
  };

  static double eval(const Node& n, const Vec2& x) {
    switch (n.op) {
      case Op::Num: return n.value;
      case Op::Var: return x[n.var];
      case Op::Add: return eval(*n.a, x) + eval(*n.b, x);
      case Op::Sub: return eval(*n.a, x) - eval(*n.b, x);
      case Op::Mul: return eval(*n.a, x) * eval(*n.b, x);
      case Op::Div: return eval(*n.a, x) / eval(*n.b, x);
      case Op::Pow: return std::pow(eval(*n.a, x), eval(*n.b, x));
      case Op::Neg: return -eval(*n.a, x);
      case Op::Call: {
        const double v = eval(*n.a, x);
        switch (n.fn) {
          case Fn::Sin: return std::sin(v);
          case Fn::Cos: return std::cos(v);
          case Fn::Tan: return std::tan(v);
          case Fn::Exp: return std::exp(v);
          case Fn::Log: return std::log(v);
          case Fn::Sqrt: return std::sqrt(v);
          case Fn::Abs: return std::abs(v);
          case Fn::Sinh: return std::sinh(v);
          case Fn::Cosh: return std::cosh(v);
          case Fn::Tanh: return std::tanh(v);
          case Fn::Atan: return std::atan(v);
        }
      }
    }
    return 0.0;
  }

  std::string text_;
  NodePtr root_;
};

}  // namespace geonet
