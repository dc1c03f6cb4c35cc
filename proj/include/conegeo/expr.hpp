#pragma once

// Closed-form scalar expressions over chart coordinates, evaluated on jets.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Names are coordinate names, `pi` and `e`. Functions: exp, log, sin, cos,
// sqrt (one argument) and pow (two). A constant exponent uses the real power
// rule; a varying one goes through exp(b log a).

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "conegeo/errors.hpp"
#include "conegeo/jet.hpp"

namespace conegeo {

class Expression {
 public:
  Expression() = default;

  /// Parses `text`; `variables` are the coordinate names in chart order.
  static Expression parse(const std::string& text, std::vector<std::string> variables) {
    Parser p{text, variables, 0};
    Expression e;
    e.root_ = p.expr();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
    e.text_ = text;
    e.arity_ = static_cast<int>(variables.size());
    return e;
  }

  Jet operator()(std::span<const Jet> x) const {
    if (!root_) throw ArgumentError("empty expression");
    if (static_cast<int>(x.size()) != arity_) throw ArgumentError("expression '" + text_ + "': wrong number of coordinates");
    const int dim = x.empty() ? 0 : x.front().dimension();
    return eval(*root_, x, dim);
  }

  double value(std::span<const double> x) const {
    const auto seeds = seed_point(x, 0);
    return (*this)(seeds).value();
  }

  bool is_constant() const { return root_ && root_->kind == Kind::constant; }
  const std::string& text() const { return text_; }

 private:
  enum class Kind { constant, variable, add, sub, mul, div, neg, pow, call };

  struct Node {
    Kind kind = Kind::constant;
    double value = 0.0;
    int var = -1;
    std::string fn;
    std::vector<std::unique_ptr<Node>> args;
  };
  using NodePtr = std::shared_ptr<Node>;

  struct Parser {
    const std::string& s;
    const std::vector<std::string>& vars;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& why) const {
      throw ArgumentError("expression '" + s + "' at " + std::to_string(pos) + ": " + why);
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    static std::unique_ptr<Node> binary(Kind k, std::unique_ptr<Node> a, std::unique_ptr<Node> b) {
      auto n = std::make_unique<Node>();
      n->kind = k;
      n->args.push_back(std::move(a));
      n->args.push_back(std::move(b));
      return fold(std::move(n));
    }

    // Constant folding keeps exponents recognisably constant.
    static std::unique_ptr<Node> fold(std::unique_ptr<Node> n) {
      for (const auto& a : n->args) {
        if (a->kind != Kind::constant) return n;
      }
      double v = 0.0;
      const auto arg = [&](std::size_t i) { return n->args[i]->value; };
      switch (n->kind) {
        case Kind::add: v = arg(0) + arg(1); break;
        case Kind::sub: v = arg(0) - arg(1); break;
        case Kind::mul: v = arg(0) * arg(1); break;
        case Kind::div: v = arg(0) / arg(1); break;
        case Kind::neg: v = -arg(0); break;
        case Kind::pow: v = std::pow(arg(0), arg(1)); break;
        default: return n;
      }
      if (!std::isfinite(v)) return n;  // leave it to evaluation to raise the domain error
      auto c = std::make_unique<Node>();
      c->value = v;
      return c;
    }

    std::unique_ptr<Node> expr() {
      auto a = term();
      for (;;) {
        if (eat('+')) {
          a = binary(Kind::add, std::move(a), term());
        } else if (eat('-')) {
          a = binary(Kind::sub, std::move(a), term());
        } else {
          return a;
        }
      }
    }

    std::unique_ptr<Node> term() {
      auto a = unary();
      for (;;) {
        if (eat('*')) {
          a = binary(Kind::mul, std::move(a), unary());
        } else if (eat('/')) {
          a = binary(Kind::div, std::move(a), unary());
        } else {
          return a;
        }
      }
    }

    std::unique_ptr<Node> unary() {
      if (eat('-')) {
        auto n = std::make_unique<Node>();
        n->kind = Kind::neg;
        n->args.push_back(unary());
        return fold(std::move(n));
      }
      if (eat('+')) return unary();
      return power();
    }

    std::unique_ptr<Node> power() {
      auto a = primary();
      if (eat('^')) return binary(Kind::pow, std::move(a), unary());
      return a;
    }

    std::unique_ptr<Node> primary() {
      skip();
      if (pos >= s.size()) fail("unexpected end of input");
      const char c = s[pos];
      if (eat('(')) {
        auto e = expr();
        if (!eat(')')) fail("expected ')'");
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos += static_cast<std::size_t>(end - begin);
        auto n = std::make_unique<Node>();
        n->value = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        const std::string name = s.substr(start, pos - start);
        if (eat('(')) {
          auto n = std::make_unique<Node>();
          n->kind = Kind::call;
          n->fn = name;
          n->args.push_back(expr());
          while (eat(',')) n->args.push_back(expr());
          if (!eat(')')) fail("expected ')' after arguments of " + name);
          const std::size_t want = name == "pow" ? 2 : 1;
          if (name != "exp" && name != "log" && name != "sin" && name != "cos" && name != "sqrt" && name != "pow") {
            fail("unknown function '" + name + "'");
          }
          if (n->args.size() != want) fail(name + " takes " + std::to_string(want) + " argument(s)");
          if (name == "pow") {
            auto p = std::make_unique<Node>();
            p->kind = Kind::pow;
            p->args = std::move(n->args);
            return fold(std::move(p));
          }
          return n;
        }
        for (std::size_t i = 0; i < vars.size(); ++i) {
          if (vars[i] == name) {
            auto n = std::make_unique<Node>();
            n->kind = Kind::variable;
            n->var = static_cast<int>(i);
            return n;
          }
        }
        auto n = std::make_unique<Node>();
        if (name == "pi") {
          n->value = std::numbers::pi;
        } else if (name == "e") {
          n->value = std::numbers::e;
        } else {
          fail("unknown name '" + name + "'");
        }
        return n;
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }
  };

  static Jet eval(const Node& n, std::span<const Jet> x, int dim) {
    switch (n.kind) {
      case Kind::constant:
        return Jet(dim, n.value);
      case Kind::variable:
        return x[static_cast<std::size_t>(n.var)];
      case Kind::add:
        return eval(*n.args[0], x, dim) + eval(*n.args[1], x, dim);
      case Kind::sub:
        return eval(*n.args[0], x, dim) - eval(*n.args[1], x, dim);
      case Kind::mul:
        return eval(*n.args[0], x, dim) * eval(*n.args[1], x, dim);
      case Kind::div:
        return eval(*n.args[0], x, dim) / eval(*n.args[1], x, dim);
      case Kind::neg:
        return -eval(*n.args[0], x, dim);
      case Kind::pow: {
        const Jet base = eval(*n.args[0], x, dim);
        if (n.args[1]->kind == Kind::constant) {
          const double q = n.args[1]->value;
          if (q == std::round(q) && std::abs(q) <= 64) return conegeo::pow(base, static_cast<int>(q));
          return conegeo::pow(base, q);
        }
        return conegeo::exp(eval(*n.args[1], x, dim) * conegeo::log(base));
      }
      case Kind::call: {
        const Jet a = eval(*n.args[0], x, dim);
        if (n.fn == "exp") return conegeo::exp(a);
        if (n.fn == "log") return conegeo::log(a);
        if (n.fn == "sin") return conegeo::sin(a);
        if (n.fn == "cos") return conegeo::cos(a);
        return conegeo::sqrt(a);
      }
    }
    throw ArgumentError("corrupt expression");
  }

  NodePtr root_;
  std::string text_;
  int arity_ = 0;
};

}  // namespace conegeo
