#pragma once

#include <cstddef>
#include <vector>

#include "skembed/measure.hpp"
#include "skembed/potential.hpp"
#include "skembed/simulate.hpp"

namespace skembed {

// ---- distances --------------------------------------------------------------

/// Radius of the two-sided DKW confidence band at confidence 1 - delta.
[[nodiscard]] double dkw_epsilon(std::size_t n, double delta);

/// Sup distance between the empirical law of the uncensored stopped values and
/// the target, evaluated at every jump point of either distribution function.
[[nodiscard]] double ks_distance(const sample_set& samples, const target_measure& mu);

/// L1 distance between the two quantile functions (both laws atomic).
[[nodiscard]] double wasserstein1(const sample_set& samples, const target_measure& mu);

// ---- sharpness of the max-law bound -----------------------------------------

struct max_law_point {
  double x = 0.0;
  double empirical = 0.0;  ///< estimated P(m_T >= x)
  double bound = 0.0;      ///< analytic ceiling from the potential
  double deviation = 0.0;  ///< |empirical - bound|
};

struct max_law_result {
  double max_abs_dev = 0.0;
  std::vector<max_law_point> curve;
};

[[nodiscard]] max_law_result max_law_sharpness(const sample_set& samples,
                                               const potential_function& pf,
                                               const std::vector<double>& x_grid);

// ---- minimality diagnostics -------------------------------------------------

enum class tail_orientation { automatic, lower, upper };

/// One point of the far-tail diagnostic.  For a minimal rule gamma_p tends to
/// 0 along the grid; slack estimates how much room the tail-mean inequality
/// E[B_T; tail event] <= -gamma P(tail event) (or its mirror image) has.
struct minimality_point {
  double gamma = 0.0;
  double gamma_p = 0.0;
  double slack = 0.0;
  double slack_stderr = 0.0;
};

/// Tail diagnostic on the running minimum (targets with negative mean) or the
/// running maximum (positive mean); `automatic` picks by the mean sign.
/// Raises wrong_orientation when an explicit orientation contradicts the sign.
[[nodiscard]] std::vector<minimality_point> minimality_diagnostic(
    const sample_set& samples, const target_measure& mu,
    const std::vector<double>& gamma_grid,
    tail_orientation orientation = tail_orientation::automatic);

// ---- stopped-mean identity --------------------------------------------------

struct stopped_mean_point {
  double x = 0.0;
  double mean = 0.0;     ///< estimate of E[B_{T ^ H_x}] (mirrored for mean > 0)
  double std_err = 0.0;
};

/// Estimates E[B_{T ^ H_x}] from terminal data only, via
/// B_{T ^ H_x} = x 1{m_T >= x} + b_T 1{m_T < x} (mirrored through the running
/// minimum when the target mean is positive).  Zero for minimal rules.
[[nodiscard]] std::vector<stopped_mean_point> stopped_mean_curve(
    const sample_set& samples, const target_measure& mu,
    const std::vector<double>& x_grid);

// ---- default grids ----------------------------------------------------------

[[nodiscard]] std::vector<double> default_gamma_grid();

/// 20 log-spaced points over (0, X] with X = max(2 * support_hi, 4), so that
/// 1, 2 and 4 always appear exactly.
[[nodiscard]] std::vector<double> default_x_grid(const target_measure& mu);

// ---- assembled report -------------------------------------------------------

struct check_verdict {
  bool applicable = false;
  bool pass = true;
  double value = 0.0;
  double threshold = 0.0;
};

struct verification_params {
  double ks_threshold = 0.01;
  double max_law_threshold = 0.015;
  double minimality_threshold = 0.1;  ///< ceiling for gamma_p at the top gamma
  std::vector<double> gamma_grid;     ///< empty = default
  std::vector<double> x_grid;         ///< empty = default
};

struct verification_report {
  double ks = 0.0;
  double w1 = 0.0;
  max_law_result max_law;
  std::vector<minimality_point> minimality;
  std::vector<stopped_mean_point> stopped_mean;
  double censored_fraction = 0.0;
  check_verdict ks_check;
  check_verdict max_law_check;       ///< applicable only with a potential
  check_verdict minimality_check;    ///< gamma_p at the top grid gamma
  check_verdict stopped_mean_check;  ///< max of |mean| / (3 stderr) over the grid
  bool overall = true;
};

/// Runs every applicable check.  Pass pf = nullptr to skip the max-law
/// sharpness comparison (it only makes sense for max-rule samples).
[[nodiscard]] verification_report run_verification(const sample_set& samples,
                                                   const target_measure& mu,
                                                   const potential_function* pf,
                                                   const verification_params& params);

}  // namespace skembed
