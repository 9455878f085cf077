#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "skembed/errors.hpp"
#include "skembed/exprlang.hpp"

using namespace skembed;

TEST_CASE("conformance table evaluates to the hand-computed values") {
  for (const oracle::expr_case& c : oracle::expr_conformance_cases()) {
    CAPTURE(c.text);
    const scalar_expr expr = scalar_expr::parse(c.text);
    CHECK(expr.eval(c.x) == doctest::Approx(c.expected).epsilon(1e-12));
  }
}

TEST_CASE("malformed inputs fail at the documented byte offset") {
  for (const oracle::expr_error_case& c : oracle::expr_error_cases()) {
    CAPTURE(c.text);
    try {
      (void)scalar_expr::parse(c.text);
      FAIL("expected a parse error for: ", c.text);
    } catch (const parse_error& e) {
      CHECK(e.code() == errc::syntax_error);
      CHECK(e.offset() == c.offset);
    }
  }
}

TEST_CASE("unclosed call reports the closing parenthesis it wanted") {
  try {
    (void)scalar_expr::parse("min(x, 1-x");
    FAIL("expected a parse error");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find("')'") != std::string::npos);
    CHECK(e.offset() == 10);
  }
}

TEST_CASE("evaluation guards its partial operations") {
  auto expect_domain_error = [](const char* text, double x) {
    CAPTURE(text);
    const scalar_expr expr = scalar_expr::parse(text);
    try {
      (void)expr.eval(x);
      FAIL("expected a domain error for: ", text);
    } catch (const error& e) {
      CHECK(e.code() == errc::domain_error);
    }
  };
  expect_domain_error("1/x", 0.0);
  expect_domain_error("log(x)", 0.0);
  expect_domain_error("log(x)", -1.0);
  expect_domain_error("sqrt(x)", -1.0);
  expect_domain_error("x^-1", 0.0);
  expect_domain_error("(-2)^x", 0.5);
}

TEST_CASE("well-defined evaluations nearby still succeed") {
  CHECK(scalar_expr::parse("log(x)").eval(1.0) == doctest::Approx(0.0));
  CHECK(scalar_expr::parse("sqrt(x)").eval(4.0) == doctest::Approx(2.0));
  CHECK(scalar_expr::parse("x^-1").eval(2.0) == doctest::Approx(0.5));
  CHECK(scalar_expr::parse("(-2)^x").eval(2.0) == doctest::Approx(4.0));
  CHECK(scalar_expr::parse("abs(x)").eval(-3.0) == 3.0);
}

TEST_CASE("printed form parses back to the identical function") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (const oracle::expr_case& c : oracle::expr_conformance_cases()) {
    CAPTURE(c.text);
    const scalar_expr original = scalar_expr::parse(c.text);
    const std::string printed = original.print();
    const scalar_expr reparsed = scalar_expr::parse(printed);
    CHECK(reparsed.print() == printed);
    for (int i = 0; i < 50; ++i) {
      const double x = unif(gen);
      const double lhs = original.eval(x);
      const double rhs = reparsed.eval(x);
      // Identical trees must evaluate identically, bit for bit.
      CHECK(std::memcmp(&lhs, &rhs, sizeof lhs) == 0);
    }
  }
}

TEST_CASE("callable view matches direct evaluation") {
  const scalar_expr expr = scalar_expr::parse("2*x^2 - 1");
  const scalar_fn f = expr.fn();
  CHECK(f(3.0) == 17.0);
  CHECK(f(-1.0) == 1.0);
}

TEST_CASE("whitespace and numeric literal forms") {
  CHECK(scalar_expr::parse("  1 +  2\t").eval(0.0) == 3.0);
  CHECK(scalar_expr::parse("1e3").eval(0.0) == 1000.0);
  CHECK(scalar_expr::parse(".5").eval(0.0) == 0.5);
  CHECK(scalar_expr::parse("1.25e-1").eval(0.0) == 0.125);
}
