#include "skembed/exprlang.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>
#include <vector>

namespace skembed {

enum class node_kind {
  number, variable,
  neg, abs_fn, exp_fn, log_fn, sqrt_fn,
  add, sub, mul, div_op, pow_op, min_fn, max_fn,
};

struct scalar_expr::node {
  node_kind kind;
  double value = 0.0;  // number only
  node_ptr a;
  node_ptr b;
};

namespace {

using node_ptr = std::shared_ptr<const scalar_expr::node>;

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class parser {
public:
  explicit parser(const std::string& text) : text_(text) {}

  node_ptr run() {
    node_ptr root = parse_expr();
    skip_space();
    if (pos_ != text_.size()) fail("end of input");
    return root;
  }

private:
  [[noreturn]] void fail(const std::string& expected) const {
    throw parse_error(pos_, expected);
  }

  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("'") + c + "'");
  }

  static node_ptr make(node_kind kind, node_ptr a = nullptr, node_ptr b = nullptr) {
    auto n = std::make_shared<scalar_expr::node>();
    n->kind = kind;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  static node_ptr make_number(double value) {
    auto n = std::make_shared<scalar_expr::node>();
    n->kind = node_kind::number;
    n->value = value;
    return n;
  }

  node_ptr parse_expr() {
    node_ptr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make(node_kind::add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make(node_kind::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  node_ptr parse_term() {
    node_ptr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(node_kind::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make(node_kind::div_op, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  node_ptr parse_unary() {
    if (accept('-')) return make(node_kind::neg, parse_unary());
    return parse_power();
  }

  node_ptr parse_power() {
    node_ptr base = parse_primary();
    // '^' outranks unary minus and associates to the right, so the exponent
    // re-enters at the unary level: 2^-3 and x^2^3 both parse.
    if (accept('^')) return make(node_kind::pow_op, base, parse_unary());
    return base;
  }

  node_ptr parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("a number, 'x', a function call, or '('");
    const char c = text_[pos_];

    if (c == '(') {
      ++pos_;
      node_ptr inner = parse_expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("a number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make_number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name = text_.substr(start, pos_ - start);
      if (name == "x") return make(node_kind::variable);
      node_kind kind;
      bool binary = false;
      if (name == "abs") kind = node_kind::abs_fn;
      else if (name == "exp") kind = node_kind::exp_fn;
      else if (name == "log") kind = node_kind::log_fn;
      else if (name == "sqrt") kind = node_kind::sqrt_fn;
      else if (name == "min") { kind = node_kind::min_fn; binary = true; }
      else if (name == "max") { kind = node_kind::max_fn; binary = true; }
      else {
        pos_ = start;
        fail("a known function (abs, exp, log, sqrt, min, max) or 'x'");
      }
      expect('(');
      node_ptr first = parse_expr();
      if (binary) {
        expect(',');
        node_ptr second = parse_expr();
        expect(')');
        return make(kind, first, second);
      }
      expect(')');
      return make(kind, first);
    }
    fail("a number, 'x', a function call, or '('");
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

double eval_node(const scalar_expr::node& n, double x) {
  switch (n.kind) {
    case node_kind::number: return n.value;
    case node_kind::variable: return x;
    case node_kind::neg: return -eval_node(*n.a, x);
    case node_kind::abs_fn: return std::abs(eval_node(*n.a, x));
    case node_kind::exp_fn: return std::exp(eval_node(*n.a, x));
    case node_kind::log_fn: {
      const double v = eval_node(*n.a, x);
      if (!(v > 0.0)) {
        raise(errc::domain_error, "log of non-positive value " + format_number(v));
      }
      return std::log(v);
    }
    case node_kind::sqrt_fn: {
      const double v = eval_node(*n.a, x);
      if (v < 0.0) {
        raise(errc::domain_error, "sqrt of negative value " + format_number(v));
      }
      return std::sqrt(v);
    }
    case node_kind::add: return eval_node(*n.a, x) + eval_node(*n.b, x);
    case node_kind::sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
    case node_kind::mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
    case node_kind::div_op: {
      const double num = eval_node(*n.a, x);
      const double den = eval_node(*n.b, x);
      if (den == 0.0) raise(errc::domain_error, "division by zero");
      return num / den;
    }
    case node_kind::pow_op: {
      const double base = eval_node(*n.a, x);
      const double exponent = eval_node(*n.b, x);
      if (base == 0.0 && exponent < 0.0) {
        raise(errc::domain_error, "zero raised to a negative power");
      }
      if (base < 0.0 && exponent != std::floor(exponent)) {
        raise(errc::domain_error,
              "negative base raised to a non-integer power");
      }
      return std::pow(base, exponent);
    }
    case node_kind::min_fn: return std::min(eval_node(*n.a, x), eval_node(*n.b, x));
    case node_kind::max_fn: return std::max(eval_node(*n.a, x), eval_node(*n.b, x));
  }
  raise(errc::domain_error, "corrupt expression node");
}

std::string print_node(const scalar_expr::node& n) {
  switch (n.kind) {
    case node_kind::number: return format_number(n.value);
    case node_kind::variable: return "x";
    case node_kind::neg: return "(-" + print_node(*n.a) + ")";
    case node_kind::abs_fn: return "abs(" + print_node(*n.a) + ")";
    case node_kind::exp_fn: return "exp(" + print_node(*n.a) + ")";
    case node_kind::log_fn: return "log(" + print_node(*n.a) + ")";
    case node_kind::sqrt_fn: return "sqrt(" + print_node(*n.a) + ")";
    case node_kind::add: return "(" + print_node(*n.a) + " + " + print_node(*n.b) + ")";
    case node_kind::sub: return "(" + print_node(*n.a) + " - " + print_node(*n.b) + ")";
    case node_kind::mul: return "(" + print_node(*n.a) + " * " + print_node(*n.b) + ")";
    case node_kind::div_op: return "(" + print_node(*n.a) + " / " + print_node(*n.b) + ")";
    case node_kind::pow_op: return "(" + print_node(*n.a) + " ^ " + print_node(*n.b) + ")";
    case node_kind::min_fn: return "min(" + print_node(*n.a) + ", " + print_node(*n.b) + ")";
    case node_kind::max_fn: return "max(" + print_node(*n.a) + ", " + print_node(*n.b) + ")";
  }
  return "?";
}

}  // namespace

scalar_expr scalar_expr::parse(const std::string& text) {
  return scalar_expr(parser(text).run());
}

double scalar_expr::eval(double x) const { return eval_node(*root_, x); }

std::string scalar_expr::print() const { return print_node(*root_); }

scalar_fn scalar_expr::fn() const {
  node_ptr root = root_;
  return [root](double x) { return eval_node(*root, x); };
}

}  // namespace skembed
