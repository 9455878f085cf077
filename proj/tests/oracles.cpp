#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

double potential_c(const std::vector<skembed::atom>& atoms, double x) {
  double total_weight = 0.0;
  double mean = 0.0;
  double abs_moment = 0.0;
  for (const skembed::atom& a : atoms) {
    total_weight += a.weight;
    mean += a.weight * a.value;
  }
  mean /= total_weight;
  for (const skembed::atom& a : atoms)
    abs_moment += (a.weight / total_weight) * std::fabs(a.value - x);
  return abs_moment + std::fabs(mean);
}

double max_law_bound(const std::vector<skembed::atom>& atoms, double x) {
  double lo = atoms.front().value;
  for (const skembed::atom& a : atoms) lo = std::min(lo, a.value);
  std::vector<double> lambdas;
  // Deep tail, a dense sweep below x, and the atoms themselves (the infimum
  // of a piecewise-linear ratio lands on a kink or escapes to -infinity).
  for (double dist = 1e6; dist >= 1.0; dist *= 0.5) lambdas.push_back(lo - dist);
  const double sweep_lo = lo - 50.0;
  for (int i = 0; i < 20000; ++i)
    lambdas.push_back(sweep_lo + (x - 1e-9 - sweep_lo) * i / 19999.0);
  for (const skembed::atom& a : atoms)
    if (a.value < x) lambdas.push_back(a.value);
  double best = 2.0;  // the lambda -> -infinity limit of the ratio
  for (double lambda : lambdas) {
    if (!(lambda < x)) continue;
    best = std::min(best, (potential_c(atoms, lambda) - lambda) / (x - lambda));
  }
  return std::clamp(0.5 * best, 0.0, 1.0);
}

double ruin_up(double x, double a, double c) { return (x - a) / (c - a); }

double two_atom_negative_max_tail(double x) {
  // Barrier: stop at -2 while the max is under 2, then stop at 0.
  if (x <= 0.0) return 1.0;
  if (x <= 2.0) return ruin_up(0.0, -2.0, x);
  // Reach 2 first (max still alive), then climb from 2 to x before falling
  // to the new stop level 0.
  return ruin_up(0.0, -2.0, 2.0) * ruin_up(2.0, 0.0, x);
}

double two_atom_negative_stopped_mean(double x) {
  const double tail = two_atom_negative_max_tail(x);
  // Stops at -2 happen exactly when the max never reached 2; for x <= 2 the
  // event {max < x} is contained in them, beyond 2 they all qualify.
  const double stopped_low_and_small_max =
      x <= 2.0 ? 1.0 - tail : 1.0 - ruin_up(0.0, -2.0, 2.0);
  return x * tail + (-2.0) * stopped_low_and_small_max;
}

double two_stage_sup_tail(double y) {
  // Every path leaves (-2, 2), so the sup of |path| is at least 2.
  if (y <= 2.0) return 1.0;
  // The upper branch stops exactly at 2.  The lower branch enters at -2 and
  // walks until it returns to 0; it dips to -y first with probability 2/y.
  const double lower_entry = 1.0 - ruin_up(0.0, -2.0, 2.0);
  return lower_entry * (1.0 - ruin_up(-2.0, -y, 0.0));
}

double control_gamma_p(double gamma) {
  // Only the ride to the waypoint at 1 is unbounded below; the return leg is
  // stopped at 0 and the final exit stays inside (-1, 1).
  const double dip = 1.0 - ruin_up(0.0, -gamma, 1.0);
  return gamma * dip;
}

double naive_max_tail_at_one() {
  // Touch 1 before the mean at -1; afterwards the centred rule never climbs
  // above 0 again.
  return ruin_up(0.0, -1.0, 1.0);
}

double dkw_epsilon(std::size_t n, double delta) {
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

const std::vector<expr_case>& expr_conformance_cases() {
  static const std::vector<expr_case> cases = {
      {"1+2*3", 0.0, 7.0},                    // * binds tighter than +
      {"(1+2)*3", 0.0, 9.0},                  // parentheses override
      {"2*x^2 - 1", 3.0, 17.0},               // ^ above *, * above -
      {"2^3^2", 0.0, 512.0},                  // ^ associates right
      {"-2^2", 0.0, -4.0},                    // ^ binds tighter than unary -
      {"(-2)^2", 0.0, 4.0},                   // parenthesised negative base
      {"2^-1", 0.0, 0.5},                     // unary - allowed in exponent
      {"1-2-3", 0.0, -4.0},                   // - associates left
      {"12/4/3", 0.0, 1.0},                   // / associates left
      {"abs(-3)+1", 0.0, 4.0},
      {"min(2, 3)", 0.0, 2.0},
      {"max(2, 3*1)", 0.0, 3.0},              // argument is a full expression
      {"min(x, 1-x)", 0.25, 0.25},
      {"exp(0)", 0.0, 1.0},
      {"log(exp(2))", 0.0, 2.0},
      {"sqrt(16)", 0.0, 4.0},
      {"-x", -5.0, 5.0},
      {"x/2 + 1/2", 3.0, 2.0},
      {"2*-3", 0.0, -6.0},                    // unary - as a factor
      {"max(min(x, 2), -1)", 5.0, 2.0},       // nested calls
  };
  return cases;
}

const std::vector<expr_error_case>& expr_error_cases() {
  static const std::vector<expr_error_case> cases = {
      {"min(x, 1-x", 10},   // unclosed call: ')' expected at end of input
      {"", 0},              // empty input: an operand expected immediately
      {"(x", 2},            // unclosed group
      {"x 2", 2},           // trailing junk after a complete expression
      {"2*+3", 2},          // '+' is not a valid operand start
      {"foo(x)", 0},        // unknown identifier, reported at its start
      {"1+", 2},            // dangling binary operator
      {"min(x)", 5},        // binary call missing its comma
      {"abs(x,2)", 5},      // unary call given two arguments
      {"2^", 2},            // dangling exponent
  };
  return cases;
}

}  // namespace oracle
