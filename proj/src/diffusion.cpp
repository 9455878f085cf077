#include "skembed/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace skembed {

namespace {

constexpr double k_inf = std::numeric_limits<double>::infinity();
constexpr double k_exp_cap = 700.0;  // |exp argument| beyond which we bail out

[[noreturn]] void overflow_at(double x, const char* what) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s near x = %.17g", what, x);
  raise(errc::quadrature_overflow, buf);
}

/// 2 drift / vol^2 with the positivity and finiteness checks applied.
double inner_integrand(const diffusion_spec& spec, double x) {
  const double v = spec.vol(x);
  if (!(v > 0.0)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "vol must be positive; vol(%.17g) = %.17g", x, v);
    raise(errc::out_of_domain, buf);
  }
  const double f = 2.0 * spec.drift(x) / (v * v);
  if (!std::isfinite(f)) overflow_at(x, "drift/vol ratio is not finite");
  return f;
}

/// Advances the inner integral and the scale integral across one cell
/// [x0, x1], given I = inner integral at x0.  Uses Simpson on the two half
/// cells for I (so the midpoint value is available) and Simpson with that
/// midpoint for the scale increment.  Returns the scale increment and updates
/// I to its value at x1.
double cell_increment(const diffusion_spec& spec, double x0, double x1,
                      double& inner) {
  const double h = x1 - x0;
  const double q1 = x0 + 0.25 * h;
  const double m = x0 + 0.5 * h;
  const double q3 = x0 + 0.75 * h;
  const double f0 = inner_integrand(spec, x0);
  const double fq1 = inner_integrand(spec, q1);
  const double fm = inner_integrand(spec, m);
  const double fq3 = inner_integrand(spec, q3);
  const double f1 = inner_integrand(spec, x1);
  const double inner_mid = inner + (h / 12.0) * (f0 + 4.0 * fq1 + fm);
  const double inner_end = inner_mid + (h / 12.0) * (fm + 4.0 * fq3 + f1);
  for (double v : {inner, inner_mid, inner_end}) {
    if (std::abs(v) > k_exp_cap) overflow_at(m, "exp argument out of range");
  }
  const double s0 = std::exp(-inner);
  const double sm = std::exp(-inner_mid);
  const double s1 = std::exp(-inner_end);
  inner = inner_end;
  return (h / 6.0) * (s0 + 4.0 * sm + s1);
}

/// Tail of the scale integral from grid_end toward the domain endpoint, with
/// the inner integral continued by trapezoid quadrature.  Returns +infinity
/// when the window contributions fail to settle under the 1e-6 cutoff.
double tail_mass(const diffusion_spec& spec, double grid_end, double inner_at_end,
                 double domain_end, int direction) {
  const bool endpoint_finite = std::isfinite(domain_end);
  double a = grid_end;
  double inner = inner_at_end;
  double total = 0.0;
  double gap = endpoint_finite ? std::abs(domain_end - grid_end) : 0.0;
  double width = std::max(1.0, 0.5 * std::abs(grid_end));
  if (endpoint_finite && gap <= 0.0) return 0.0;

  for (int window = 0; window < 60; ++window) {
    double b;
    if (endpoint_finite) {
      gap *= 0.5;
      b = domain_end - static_cast<double>(direction) * gap;
    } else {
      b = a + static_cast<double>(direction) * width;
      width *= 2.0;
    }
    constexpr int panels = 64;
    const double dp = (b - a) / panels;
    double contribution = 0.0;
    double f_prev = inner_integrand(spec, a);
    double g_prev = -inner > k_exp_cap ? k_inf : std::exp(-inner);
    for (int p = 0; p < panels; ++p) {
      const double xr = a + dp * (p + 1);
      const double f_next = inner_integrand(spec, xr);
      inner += 0.5 * (f_prev + f_next) * dp * direction *
               (dp < 0.0 ? -1.0 : 1.0);  // signed toward the endpoint
      const double g_next = -inner > k_exp_cap ? k_inf : std::exp(-inner);
      contribution += 0.5 * (g_prev + g_next) * std::abs(dp);
      if (!std::isfinite(contribution)) return k_inf;
      f_prev = f_next;
      g_prev = g_next;
    }
    total += contribution;
    if (window >= 1 && contribution <= 1e-6 * (1.0 + total)) return total;
    a = b;
  }
  return k_inf;
}

}  // namespace

// ---- scale table ------------------------------------------------------------

scale_table scale_table::build(const diffusion_spec& spec, double grid_lo,
                               double grid_hi, std::size_t points) {
  if (!(grid_lo < 0.0 && 0.0 < grid_hi)) {
    raise(errc::out_of_domain, "scale grid must straddle the start at 0");
  }
  if (!(grid_lo > spec.domain_lo && grid_hi < spec.domain_hi)) {
    raise(errc::out_of_domain, "scale grid must lie inside the open domain");
  }
  if (points < 8) raise(errc::out_of_domain, "scale grid needs at least 8 points");

  const std::size_t cells = points - 1;
  const double span = grid_hi - grid_lo;
  std::size_t n_neg = static_cast<std::size_t>(
      std::lround(static_cast<double>(cells) * (-grid_lo / span)));
  n_neg = std::clamp<std::size_t>(n_neg, 1, cells - 1);
  const std::size_t n_pos = cells - n_neg;

  scale_table table;
  table.xs_.resize(points);
  table.ys_.resize(points);
  for (std::size_t i = 0; i <= n_neg; ++i) {
    table.xs_[i] = grid_lo * (1.0 - static_cast<double>(i) / static_cast<double>(n_neg));
  }
  table.xs_[n_neg] = 0.0;
  for (std::size_t j = 1; j <= n_pos; ++j) {
    table.xs_[n_neg + j] = grid_hi * (static_cast<double>(j) / static_cast<double>(n_pos));
  }
  table.xs_.back() = grid_hi;

  // Integrate outward from 0 in both directions; s(0) = 0 exactly.
  table.ys_[n_neg] = 0.0;
  double inner_hi = 0.0;
  for (std::size_t j = n_neg; j + 1 < points; ++j) {
    const double inc = cell_increment(spec, table.xs_[j], table.xs_[j + 1], inner_hi);
    table.ys_[j + 1] = table.ys_[j] + inc;
    if (!(table.ys_[j + 1] > table.ys_[j])) {
      overflow_at(table.xs_[j + 1], "scale increment underflowed");
    }
  }
  double inner_lo = 0.0;
  for (std::size_t i = n_neg; i > 0; --i) {
    // Walk the cell right-to-left: the increment over [x_{i-1}, x_i] is the
    // same Simpson sum; track the inner integral from 0 down.
    double inner_start = inner_lo;
    const double h = table.xs_[i] - table.xs_[i - 1];
    const double x0 = table.xs_[i - 1];
    const double q1 = x0 + 0.25 * h;
    const double m = x0 + 0.5 * h;
    const double q3 = x0 + 0.75 * h;
    const double f0 = inner_integrand(spec, x0);
    const double fq1 = inner_integrand(spec, q1);
    const double fm = inner_integrand(spec, m);
    const double fq3 = inner_integrand(spec, q3);
    const double f1 = inner_integrand(spec, table.xs_[i]);
    const double inner_mid = inner_start - (h / 12.0) * (fm + 4.0 * fq3 + f1);
    const double inner_low = inner_mid - (h / 12.0) * (f0 + 4.0 * fq1 + fm);
    for (double v : {inner_start, inner_mid, inner_low}) {
      if (std::abs(v) > k_exp_cap) overflow_at(m, "exp argument out of range");
    }
    const double inc = (h / 6.0) * (std::exp(-inner_low) + 4.0 * std::exp(-inner_mid) +
                                    std::exp(-inner_start));
    table.ys_[i - 1] = table.ys_[i] - inc;
    if (!(table.ys_[i - 1] < table.ys_[i])) {
      overflow_at(table.xs_[i - 1], "scale increment underflowed");
    }
    inner_lo = inner_low;
  }

  const double tail_hi = tail_mass(spec, grid_hi, inner_hi, spec.domain_hi, +1);
  const double tail_lo = tail_mass(spec, grid_lo, inner_lo, spec.domain_lo, -1);
  table.limit_hi_ = std::isfinite(tail_hi) ? table.ys_.back() + tail_hi : k_inf;
  table.limit_lo_ = std::isfinite(tail_lo) ? table.ys_.front() - tail_lo : -k_inf;
  return table;
}

namespace {

double interpolate(const std::vector<double>& from, const std::vector<double>& to,
                   double v, const char* what) {
  if (!(v >= from.front() && v <= from.back())) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %.17g outside [%.17g, %.17g]", what, v,
                  from.front(), from.back());
    raise(errc::out_of_range, buf);
  }
  const auto it = std::upper_bound(from.begin(), from.end(), v);
  const std::size_t i = it == from.end() ? from.size() - 1
                                         : static_cast<std::size_t>(it - from.begin());
  const std::size_t lo = i == 0 ? 0 : i - 1;
  const double x0 = from[lo];
  const double x1 = from[lo + 1];
  const double t = x1 == x0 ? 0.0 : (v - x0) / (x1 - x0);
  return to[lo] + t * (to[lo + 1] - to[lo]);
}

}  // namespace

double scale_table::eval(double x) const { return interpolate(xs_, ys_, x, "x"); }

double scale_table::invert(double y) const { return interpolate(ys_, xs_, y, "scale value"); }

double scale_table::slope_at(double x) const {
  if (!(x >= xs_.front() && x <= xs_.back())) {
    raise(errc::out_of_range, "slope query outside the grid");
  }
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  std::size_t i = it == xs_.end() ? xs_.size() - 1
                                  : static_cast<std::size_t>(it - xs_.begin());
  const std::size_t lo = i == 0 ? 0 : i - 1;
  return (ys_[lo + 1] - ys_[lo]) / (xs_[lo + 1] - xs_[lo]);
}

// ---- embeddability ----------------------------------------------------------

const char* domain_case_name(domain_case c) noexcept {
  switch (c) {
    case domain_case::recurrent: return "recurrent";
    case domain_case::half_line: return "half_line";
    case domain_case::bounded: return "bounded";
  }
  return "unknown";
}

embeddability classify_embeddable(const scale_table& st, const target_measure& mu_x) {
  embeddability out;
  out.s_lo = st.limit_lo();
  out.s_hi = st.limit_hi();
  double m = 0.0;
  for (const atom& a : mu_x.atoms()) m += a.weight * st.eval(a.value);
  out.scale_mean = m;

  const bool lo_finite = std::isfinite(out.s_lo);
  const bool hi_finite = std::isfinite(out.s_hi);
  constexpr double tol = 1e-9;
  if (!lo_finite && !hi_finite) {
    out.kind = domain_case::recurrent;
    out.embeddable = true;
  } else if (!lo_finite) {
    out.kind = domain_case::half_line;
    out.embeddable = m >= -tol;  // image bounded above: non-negative mean
  } else if (!hi_finite) {
    out.kind = domain_case::half_line;
    out.embeddable = m <= tol;  // image bounded below: non-positive mean
  } else {
    out.kind = domain_case::bounded;
    out.embeddable = std::abs(m) <= tol;
  }
  return out;
}

target_measure pushforward_measure(const scale_table& st, const target_measure& mu_x) {
  std::vector<atom> atoms;
  atoms.reserve(mu_x.atoms().size());
  for (const atom& a : mu_x.atoms()) atoms.push_back({st.eval(a.value), a.weight});
  return target_measure::from_atoms(atoms);
}

// ---- path engine ------------------------------------------------------------

diffusion_path euler_diffusion(const diffusion_spec& spec, const scale_table& st,
                               const stopping_rule& rule, const euler_params& params,
                               rng_stream& rng) {
  if (!(params.dt > 0.0)) raise(errc::invalid_step, "dt must be positive");
  if (!(params.horizon > 0.0)) raise(errc::invalid_step, "horizon must be positive");

  diffusion_path out;
  sample_record& rec = out.rec;
  walk_state ws{0.0, 0.0, 0.0, 0, 0.0, 0.0};
  double x = 0.0;
  const double dt = params.dt;
  const double sdt = std::sqrt(dt);
  const long max_steps = std::lround(params.horizon / dt);
  long step = 0;
  double stopped = 0.0;

  const auto finalize_stop = [&](double level) {
    rec.b_T = level;
    rec.m_T = ws.max;
    rec.j_T = ws.min;
    rec.clock = static_cast<double>(step) * dt;
    out.x_T = st.invert(level);
  };

  const auto touch = [&](double y) {
    ws.max = std::max(ws.max, y);
    ws.min = std::min(ws.min, y);
    ws.stage_max = std::max(ws.stage_max, y);
    ws.stage_min = std::min(ws.stage_min, y);
  };

  const auto settle_here = [&]() -> bool {
    for (;;) {
      const decision d = stop_decision(rule, ws);
      if (d.kind == decision_kind::keep_going) return false;
      if (d.kind == decision_kind::stop) {
        stopped = d.level;
        ws.value = d.level;
        touch(d.level);
        return true;
      }
      ws.value = d.level;
      touch(d.level);
      x = st.invert(d.level);
      ws.stage = d.next_stage;
      ws.stage_max = ws.stage_min = ws.value;
      ++rec.stage_count;
    }
  };

  for (;;) {
    if (settle_here()) {
      finalize_stop(stopped);
      return out;
    }

    const active_boundaries ab = boundaries(rule, ws);
    const bool has_lo = ab.below.has_value();
    const bool has_hi = ab.above.has_value();
    const double lo = has_lo ? ab.below->level : -k_inf;
    const double hi = has_hi ? ab.above->level : k_inf;

    bool event = false;
    bool hit_above = false;
    boundary hit{};
    double y1 = ws.value;
    while (step < max_steps) {
      ++step;
      const double x0 = x;
      const double y0 = ws.value;
      const double x1 = x0 + spec.drift(x0) * dt + spec.vol(x0) * sdt * rng.gaussian();
      if (!(x1 > st.grid_lo() && x1 < st.grid_hi())) {
        rec.b_T = y0;
        rec.m_T = ws.max;
        rec.j_T = ws.min;
        rec.clock = static_cast<double>(step) * dt;
        rec.censored = true;
        out.x_T = x0;
        out.domain_exit = true;
        return out;
      }
      y1 = st.eval(x1);
      if (has_lo && y1 <= lo) {
        hit = *ab.below;
        event = true;
      } else if (has_hi && y1 >= hi) {
        hit = *ab.above;
        hit_above = true;
        event = true;
      } else if (params.bridge_correction) {
        // Bridge test in scale space with the local diffusion coefficient.
        const double sv = st.slope_at(x0) * spec.vol(x0);
        const double var = sv * sv * dt;
        const double band = 6.0 * std::sqrt(var);
        if (has_lo && y0 - lo < band && y1 - lo < band &&
            rng.uniform01() < std::exp(-2.0 * (y0 - lo) * (y1 - lo) / var)) {
          hit = *ab.below;
          event = true;
        } else if (has_hi && hi - y0 < band && hi - y1 < band &&
                   rng.uniform01() < std::exp(-2.0 * (hi - y0) * (hi - y1) / var)) {
          hit = *ab.above;
          hit_above = true;
          event = true;
        }
      }
      if (event) break;
      x = x1;
      ws.value = y1;
      touch(y1);
    }

    if (!event) {
      rec.clock = static_cast<double>(step) * dt;
      rec.b_T = ws.value;
      rec.m_T = ws.max;
      rec.j_T = ws.min;
      rec.censored = true;
      out.x_T = x;
      return out;
    }

    if (hit.action == boundary_action::regime) {
      double level = hit.level;
      bool absorbed = false;
      for (;;) {
        ws.value = level;
        touch(level);
        x = st.invert(level);
        if (settle_here()) {
          finalize_stop(stopped);
          absorbed = true;
          break;
        }
        const active_boundaries nb = boundaries(rule, ws);
        const std::optional<boundary>& side = hit_above ? nb.above : nb.below;
        if (side && side->action == boundary_action::regime &&
            (hit_above ? y1 >= side->level : y1 <= side->level)) {
          level = side->level;
          continue;
        }
        ws.value = y1;
        touch(y1);
        x = st.invert(y1);
        break;
      }
      if (absorbed) return out;
      continue;
    }

    ws.value = hit.level;
    touch(hit.level);
    x = st.invert(hit.level);
    if (hit.action == boundary_action::stop) {
      finalize_stop(hit.level);
      return out;
    }
    ws.stage = hit.next_stage;
    ws.stage_max = ws.stage_min = ws.value;
    ++rec.stage_count;
  }
}

}  // namespace skembed
