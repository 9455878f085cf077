#pragma once

#include <memory>
#include <vector>

#include "skembed/exprlang.hpp"
#include "skembed/measure.hpp"

namespace skembed {

/// Breakpoint of the piecewise-linear potential: location, value, and the
/// one-sided slopes meeting there.
struct kink {
  double x = 0.0;
  double c = 0.0;
  double slope_left = 0.0;
  double slope_right = 0.0;
};

/// Support line of the potential with slope theta: where it touches the graph
/// and where it crosses the diagonals y = x and y = -x.
struct tangent_frame {
  double theta = 0.0;
  double u = 0.0;       ///< leftmost touch point; -inf at theta = -1
  double z_plus = 0.0;  ///< crossing with y =  x; always >= 0
  double z_minus = 0.0; ///< crossing with y = -x (as a positive coordinate)
};

/// One step of the stopping barrier: for running max in
/// [max_threshold, next threshold) the rule stops once the path value drops
/// to `barrier` (-inf = never stop in this band).
struct barrier_row {
  double max_threshold = 0.0;
  double barrier = 0.0;
};

/// Right-continuous step function mapping the running max to a stop level.
class barrier_table {
public:
  explicit barrier_table(std::vector<barrier_row> rows);

  [[nodiscard]] const std::vector<barrier_row>& rows() const noexcept { return rows_; }

  /// Index of the row active at the given running max.
  [[nodiscard]] std::size_t row_index(double running_max) const noexcept;
  [[nodiscard]] double barrier_at(double running_max) const noexcept;

private:
  std::vector<barrier_row> rows_;
};

/// The potential of a finitely supported target law: the convex piecewise
/// linear function c(x) = E|X - x| + |mean|, with slopes in [-1, 1] and exact
/// linear tails.  All tangent and barrier geometry derives from it.
class potential_function {
public:
  static potential_function build(const target_measure& mu);

  [[nodiscard]] const target_measure& measure() const noexcept { return mu_; }
  [[nodiscard]] double mean() const noexcept { return mu_.mean(); }
  [[nodiscard]] double support_lo() const noexcept { return mu_.support_lo(); }
  [[nodiscard]] double support_hi() const noexcept { return mu_.support_hi(); }
  [[nodiscard]] const std::vector<kink>& kinks() const noexcept { return kinks_; }

  [[nodiscard]] double eval_c(double x) const noexcept;
  /// Left derivative of c; equals 1 - 2 * mass_geq(x).
  [[nodiscard]] double left_derivative(double x) const noexcept;

  /// Leftmost point where the slope-theta support line touches the graph.
  /// Returns -inf at theta = -1 (the left tail is itself the support line).
  /// Requires theta in [-1, 1].
  [[nodiscard]] double touch_point(double theta) const;

  /// Support line with slope theta plus its diagonal crossings.
  /// Degenerate ends: z_plus = +inf at theta = 1 when the line sits strictly
  /// above the diagonal at the top (mean < 0), else support_hi; z_minus
  /// mirrors this at theta = -1 (+inf when mean > 0, else -support_lo).
  [[nodiscard]] tangent_frame frame(double theta) const;

  /// Stop level for a path whose running max sits at x > 0.  -inf while the
  /// max is below the reach of any support line (mean > 0, x < mean);
  /// support_hi once x passes the top of the support.
  [[nodiscard]] double barrier(double x) const;

  /// The full barrier as a step function of the running max.
  [[nodiscard]] barrier_table table() const;

  /// Sharp upper bound for P(running max at the stopping time >= x):
  /// (1/2) inf over lambda < x of (c(lambda) - lambda) / (x - lambda),
  /// clamped to [0, 1].  The infimum is attained at a kink or in the
  /// lambda -> -inf limit, so the evaluation is exact.
  [[nodiscard]] double max_law_bound(double x) const;

private:
  explicit potential_function(target_measure mu);

  /// Crossing of the line through (x0, c0) with slope s and the diagonal
  /// y = x; +inf when the line is parallel-or-above.
  [[nodiscard]] static double diagonal_crossing(double x0, double c0, double s);

  target_measure mu_;
  std::vector<kink> kinks_;
};

/// Monotone envelope of |h| grown outward from the origin and shifted so the
/// origin maps to zero: x >= 0 evaluates to max of |h| over [0, x] minus
/// |h(0)|, mirrored for x < 0.  Backed by a fixed grid (points_per_side per
/// half-line) refined with the measure atoms and the diagonal-crossing
/// candidates of pf, plus a pointwise |h(x)| term that makes monotone
/// integrands exact.
class normalized_fn {
public:
  normalized_fn(scalar_fn h, const potential_function& pf, int points_per_side);

  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] scalar_fn fn() const;

private:
  struct table;
  std::shared_ptr<const table> table_;
};

/// Builds the normalized envelope of h on a grid adapted to pf.
[[nodiscard]] normalized_fn normalize_h(const scalar_fn& h,
                                        const potential_function& pf,
                                        int points_per_side = 10000);

/// Smallest theta in [-1, 1] at which the envelope value at the upper
/// diagonal crossing reaches the envelope value at the lower one:
/// inf { theta : h(z_plus(theta)) >= h(-z_minus(theta)) }.  h must already be
/// normalized.  Found by bisection to 1e-12 and snapped to the nearest
/// kink-slope boundary within 1e-9.  Raises no_crossing when the condition
/// fails on all of [-1, 1].
[[nodiscard]] double theta_zero(const potential_function& pf, const scalar_fn& h_normalized);

}  // namespace skembed
