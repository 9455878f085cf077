#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>

#include "skembed/errors.hpp"

namespace skembed {

/// Real-valued function of one real variable.
using scalar_fn = std::function<double(double)>;

/// Parse failure carrying the byte offset where the input stopped making sense.
class parse_error : public error {
public:
  parse_error(std::size_t offset, const std::string& expected)
      : error(errc::syntax_error,
              "byte " + std::to_string(offset) + ": expected " + expected),
        offset_(offset) {}

  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

/// A parsed expression in one variable x.
///
/// Grammar (loosest to tightest binding):
///   expr  := term (('+' | '-') term)*
///   term  := unary (('*' | '/') unary)*
///   unary := '-' unary | power
///   power := primary ('^' unary)?          -- right-associative
///   primary := NUMBER | 'x' | fn '(' expr ')' | fn2 '(' expr ',' expr ')'
///            | '(' expr ')'
/// with fn in {abs, exp, log, sqrt} and fn2 in {min, max}.
///
/// eval raises domain_error on log of a non-positive value, division by zero,
/// zero raised to a negative power, a negative base raised to a non-integer
/// power, or the square root of a negative value.
class scalar_expr {
public:
  static scalar_expr parse(const std::string& text);

  [[nodiscard]] double eval(double x) const;

  /// Fully parenthesised rendering; parse(print()) reproduces the tree.
  [[nodiscard]] std::string print() const;

  /// Callable view, convenient for passing into numeric code.
  [[nodiscard]] scalar_fn fn() const;

  struct node;  // definition is internal to the implementation
  using node_ptr = std::shared_ptr<const node>;

private:
  explicit scalar_expr(node_ptr root) : root_(std::move(root)) {}

  node_ptr root_;
};

}  // namespace skembed
