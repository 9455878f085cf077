#include "skembed/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace skembed {

namespace {

constexpr double k_inf = std::numeric_limits<double>::infinity();

}  // namespace

// ---- barrier_table ----------------------------------------------------------

barrier_table::barrier_table(std::vector<barrier_row> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) raise(errc::empty_measure, "barrier table with no rows");
  for (std::size_t i = 0; i + 1 < rows_.size(); ++i) {
    if (!(rows_[i].max_threshold < rows_[i + 1].max_threshold)) {
      raise(errc::out_of_domain, "barrier thresholds must increase");
    }
  }
}

std::size_t barrier_table::row_index(double running_max) const noexcept {
  // Rows cover [threshold_k, threshold_{k+1}); the first row also covers the
  // start of the walk where the max is still at its threshold.
  std::size_t lo = 0;
  std::size_t hi = rows_.size();
  while (lo + 1 < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (rows_[mid].max_threshold <= running_max) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double barrier_table::barrier_at(double running_max) const noexcept {
  return rows_[row_index(running_max)].barrier;
}

// ---- potential_function -----------------------------------------------------

potential_function::potential_function(target_measure mu) : mu_(std::move(mu)) {
  const auto& atoms = mu_.atoms();
  const std::size_t n = atoms.size();
  const double abs_mean = std::abs(mu_.mean());

  // Prefix sums give c and both one-sided slopes in one pass.
  double weight_below = 0.0;   // total weight strictly below the current atom
  double moment_below = 0.0;   // sum of w * x strictly below
  double moment_total = 0.0;
  for (const atom& a : atoms) moment_total += a.value * a.weight;

  kinks_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = atoms[i].value;
    const double w = atoms[i].weight;
    const double weight_upto = weight_below + w;
    const double moment_upto = moment_below + x * w;
    kink k;
    k.x = x;
    // c(x) = sum_{j<=i} w_j (x - x_j) + sum_{j>i} w_j (x_j - x) + |mean|
    k.c = weight_upto * x - moment_upto + (moment_total - moment_upto) -
          (1.0 - weight_upto) * x + abs_mean;
    k.slope_left = 2.0 * weight_below - 1.0;
    k.slope_right = 2.0 * weight_upto - 1.0;
    kinks_.push_back(k);
    weight_below = weight_upto;
    moment_below = moment_upto;
  }
}

potential_function potential_function::build(const target_measure& mu) {
  return potential_function(mu);
}

double potential_function::eval_c(double x) const noexcept {
  const double m = mean();
  const double abs_m = std::abs(m);
  if (x <= kinks_.front().x) return abs_m + m - x;
  if (x >= kinks_.back().x) return x - m + abs_m;
  // Linear interpolation between adjacent kinks is exact.
  std::size_t lo = 0;
  std::size_t hi = kinks_.size() - 1;
  while (lo + 1 < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (kinks_[mid].x <= x) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const kink& a = kinks_[lo];
  const kink& b = kinks_[hi];
  const double t = (x - a.x) / (b.x - a.x);
  return a.c + t * (b.c - a.c);
}

double potential_function::left_derivative(double x) const noexcept {
  return 1.0 - 2.0 * mu_.mass_geq(x);
}

double potential_function::touch_point(double theta) const {
  if (!(theta >= -1.0 && theta <= 1.0)) {
    raise(errc::out_of_domain, "slope " + std::to_string(theta) + " outside [-1, 1]");
  }
  if (theta == -1.0) return -k_inf;
  // Slopes are non-decreasing across kinks; the support line with slope theta
  // touches first at the earliest kink whose right slope reaches theta.  When
  // theta equals a segment slope the touch set is the whole segment and the
  // left endpoint is returned.
  std::size_t lo = 0;
  std::size_t hi = kinks_.size() - 1;
  if (kinks_[0].slope_right >= theta) return kinks_[0].x;
  while (lo + 1 < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (kinks_[mid].slope_right < theta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return kinks_[hi].x;
}

double potential_function::diagonal_crossing(double x0, double c0, double s) {
  if (s >= 1.0) return c0 - x0 > 0.0 ? k_inf : x0;
  return (c0 - s * x0) / (1.0 - s);
}

tangent_frame potential_function::frame(double theta) const {
  const double m = mean();
  tangent_frame f;
  f.theta = theta;
  f.u = touch_point(theta);

  double intercept;  // value of the support line at the origin
  if (theta == -1.0) {
    intercept = std::abs(m) + m;  // the left tail line evaluated at 0
  } else {
    intercept = eval_c(f.u) - theta * f.u;
  }

  if (theta == 1.0) {
    f.z_plus = intercept > 0.0 ? k_inf : support_hi();
  } else {
    f.z_plus = intercept / (1.0 - theta);
  }
  if (theta == -1.0) {
    f.z_minus = intercept > 0.0 ? k_inf : -support_lo();
  } else {
    f.z_minus = intercept / (1.0 + theta);
  }
  return f;
}

barrier_table potential_function::table() const {
  const double m = mean();
  std::vector<barrier_row> rows;
  if (m > 0.0) rows.push_back({0.0, -k_inf});

  for (const kink& k : kinks_) {
    const double z_lo = diagonal_crossing(k.x, k.c, k.slope_left);
    const double z_hi = diagonal_crossing(k.x, k.c, k.slope_right);
    if (z_hi > z_lo) rows.push_back({z_lo, k.x});
  }
  if (m >= 0.0) rows.push_back({support_hi(), support_hi()});
  return barrier_table(std::move(rows));
}

double potential_function::barrier(double x) const {
  if (!(x > 0.0)) {
    raise(errc::out_of_domain, "barrier defined for positive max levels only");
  }
  return table().barrier_at(x);
}

double potential_function::max_law_bound(double x) const {
  double best = 2.0;  // the lambda -> -inf limit of the ratio
  for (const kink& k : kinks_) {
    if (k.x >= x) break;
    best = std::min(best, (k.c - k.x) / (x - k.x));
  }
  return std::clamp(0.5 * best, 0.0, 1.0);
}

// ---- normalized_fn ----------------------------------------------------------

struct normalized_fn::table {
  scalar_fn h;
  double h0 = 0.0;                 // |h(0)|
  std::vector<double> xs_pos;      // ascending from 0
  std::vector<double> env_pos;     // running max of |h| outward
  std::vector<double> xs_neg;      // descending from 0 (stored as positives? no: actual values, descending)
  std::vector<double> env_neg;

  [[nodiscard]] double eval(double x) const {
    const double point = std::abs(h(x));
    double env = 0.0;
    if (x >= 0.0) {
      // last grid point <= x
      const auto it = std::upper_bound(xs_pos.begin(), xs_pos.end(), x);
      const std::size_t idx = static_cast<std::size_t>(it - xs_pos.begin());
      env = idx == 0 ? h0 : env_pos[idx - 1];
    } else {
      // last grid point >= x (grid stored descending)
      const auto it = std::upper_bound(xs_neg.begin(), xs_neg.end(), x,
                                       [](double a, double b) { return a > b; });
      const std::size_t idx = static_cast<std::size_t>(it - xs_neg.begin());
      env = idx == 0 ? h0 : env_neg[idx - 1];
    }
    return std::max(env, point) - h0;
  }
};

normalized_fn::normalized_fn(scalar_fn h, const potential_function& pf,
                             int points_per_side) {
  if (points_per_side < 2) {
    raise(errc::invalid_step, "normalisation grid needs at least 2 points per side");
  }
  auto t = std::make_shared<table>();
  t->h = std::move(h);
  t->h0 = std::abs(t->h(0.0));

  // Half-line reach: cover the support and every diagonal-crossing candidate
  // by a comfortable margin.
  double reach = 4.0;
  reach = std::max(reach, 2.0 * std::abs(pf.support_lo()));
  reach = std::max(reach, 2.0 * std::abs(pf.support_hi()));
  std::vector<double> special_pos{0.0};
  std::vector<double> special_neg{0.0};
  for (const atom& a : pf.measure().atoms()) {
    (a.value >= 0.0 ? special_pos : special_neg).push_back(a.value);
  }
  for (const kink& k : pf.kinks()) {
    for (const double s : {k.slope_left, k.slope_right}) {
      const double intercept = k.c - s * k.x;
      if (s < 1.0) {
        const double zp = intercept / (1.0 - s);
        if (std::isfinite(zp)) {
          special_pos.push_back(zp);
          reach = std::max(reach, 2.0 * zp);
        }
      }
      if (s > -1.0) {
        const double zm = intercept / (1.0 + s);
        if (std::isfinite(zm)) {
          special_neg.push_back(-zm);
          reach = std::max(reach, 2.0 * zm);
        }
      }
    }
  }

  auto build_side = [&](int sign, const std::vector<double>& special,
                        std::vector<double>& xs, std::vector<double>& env) {
    xs.reserve(static_cast<std::size_t>(points_per_side) + special.size());
    for (int i = 0; i < points_per_side; ++i) {
      xs.push_back(sign * reach * (i + 1) / points_per_side);
    }
    for (double s : special) {
      if (sign * s > 0.0) xs.push_back(s);
    }
    std::sort(xs.begin(), xs.end(), [&](double a, double b) {
      return sign > 0 ? a < b : a > b;
    });
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    env.reserve(xs.size());
    double running = t->h0;
    for (double x : xs) {
      running = std::max(running, std::abs(t->h(x)));
      env.push_back(running);
    }
  };
  build_side(+1, special_pos, t->xs_pos, t->env_pos);
  build_side(-1, special_neg, t->xs_neg, t->env_neg);

  table_ = std::move(t);
}

double normalized_fn::operator()(double x) const { return table_->eval(x); }

scalar_fn normalized_fn::fn() const {
  auto t = table_;
  return [t](double x) { return t->eval(x); };
}

normalized_fn normalize_h(const scalar_fn& h, const potential_function& pf,
                          int points_per_side) {
  return normalized_fn(h, pf, points_per_side);
}

// ---- theta_zero -------------------------------------------------------------

double theta_zero(const potential_function& pf, const scalar_fn& h_normalized) {
  const auto& h = h_normalized;
  auto gap = [&](double theta) {
    const tangent_frame f = pf.frame(theta);
    // Infinite crossings stand for the whole half-line; probe far out so an
    // unbounded envelope dominates and a bounded one saturates.
    constexpr double far = 1e9;
    const double up = std::isfinite(f.z_plus) ? h(f.z_plus) : h(far);
    const double down = std::isfinite(f.z_minus) ? h(-f.z_minus) : h(-far);
    return up - down;
  };

  if (gap(-1.0) >= 0.0) return -1.0;
  if (gap(1.0) < 0.0) {
    raise(errc::no_crossing,
          "integrand never favours the upper crossing on [-1, 1]");
  }
  double lo = -1.0;  // gap < 0
  double hi = 1.0;   // gap >= 0
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (gap(mid) >= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  // Snap onto an adjacent kink-slope boundary: crossings typically happen
  // exactly where the touch point jumps.
  double snapped = hi;
  double best_gap = 1e-9;
  for (const kink& k : pf.kinks()) {
    for (const double s : {k.slope_left, k.slope_right}) {
      const double d = std::abs(s - hi);
      if (d < best_gap) {
        best_gap = d;
        snapped = s;
      }
    }
  }
  if (snapped != hi && gap(snapped) >= 0.0) return snapped;
  return hi;
}

}  // namespace skembed
