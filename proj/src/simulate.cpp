#include "skembed/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

namespace skembed {

namespace {

constexpr double k_inf = std::numeric_limits<double>::infinity();

void touch(walk_state& st, double x) noexcept {
  st.max = std::max(st.max, x);
  st.min = std::min(st.min, x);
  st.stage_max = std::max(st.stage_max, x);
  st.stage_min = std::min(st.stage_min, x);
}

/// Runs the stop/advance chain at the current position; returns true when the
/// walk has stopped, filling the stopped value.
bool settle(const stopping_rule& rule, walk_state& st, int& stage_count,
            double& stopped_value) {
  for (;;) {
    const decision d = stop_decision(rule, st);
    if (d.kind == decision_kind::keep_going) return false;
    if (d.kind == decision_kind::stop) {
      stopped_value = d.level;
      st.value = d.level;
      touch(st, d.level);
      return true;
    }
    st.value = d.level;
    touch(st, d.level);
    st.stage = d.next_stage;
    st.stage_max = st.stage_min = st.value;
    ++stage_count;
  }
}

/// The stopping level the walk is guaranteed to reach from the current regime,
/// if there is exactly one; used to finalise horizon-bound Euler paths whose
/// remaining evolution cannot change the destination.
[[nodiscard]] bool unique_destination(const stopping_rule& rule,
                                      const walk_state& st, double& level) {
  const rule_stage& stage = rule.stages()[static_cast<std::size_t>(st.stage)];
  if (const auto* ex = std::get_if<exit_stage>(&stage)) {
    const bool lo = std::isfinite(ex->lower);
    const bool hi = std::isfinite(ex->upper);
    if (lo && !hi && ex->next_on_lower == exit_stage::stop_here) {
      level = ex->lower;
      return true;
    }
    if (hi && !lo && ex->next_on_upper == exit_stage::stop_here) {
      level = ex->upper;
      return true;
    }
    return false;
  }
  const auto& ay = std::get<ay_stage>(stage);
  const double extreme =
      ay.sign > 0 ? (ay.stage_local_extremes ? st.stage_max : st.max)
                  : (ay.stage_local_extremes ? st.stage_min : st.min);
  const double we = ay.sign * (extreme - ay.origin);
  const auto& rows = ay.table.rows();
  const std::size_t k = ay.table.row_index(we);
  if (k + 1 == rows.size() && std::isfinite(rows[k].barrier)) {
    level = ay.origin + ay.sign * rows[k].barrier;
    return true;
  }
  return false;
}

}  // namespace

std::size_t sample_set::censored_count() const noexcept {
  std::size_t n = 0;
  for (const sample_record& r : records) n += r.censored ? 1 : 0;
  return n;
}

// ---- exact engine -----------------------------------------------------------

sample_record exact_walk(const stopping_rule& rule, rng_stream& rng) {
  sample_record rec;
  walk_state st{0.0, 0.0, 0.0, 0, 0.0, 0.0};
  double stopped = 0.0;
  for (long guard = 0; guard < 1000000; ++guard) {
    if (settle(rule, st, rec.stage_count, stopped)) {
      rec.b_T = stopped;
      rec.m_T = st.max;
      rec.j_T = st.min;
      return rec;
    }

    const active_boundaries ab = boundaries(rule, st);
    if (!ab.below && !ab.above) {
      raise(errc::unbounded_segment, "segment with no boundary on either side");
    }
    const double x = st.value;
    boundary hit{};
    if (ab.below && ab.above) {
      const double a = ab.below->level;
      const double c = ab.above->level;
      const bool up = rng.uniform01() * (c - a) < (x - a);
      const double v = rng.uniform01();
      if (up) {
        // Minimum of the walk conditioned on leaving upward.
        const double y = (a * (c - x) + v * c * (x - a)) / ((c - x) + v * (x - a));
        touch(st, y);
        hit = *ab.above;
      } else {
        // Maximum of the walk conditioned on leaving downward.
        const double y = (c * (x - a) + a * v * (c - x)) / ((x - a) + v * (c - x));
        touch(st, y);
        hit = *ab.below;
      }
    } else if (ab.below) {
      // Open above: the walk reaches the lower boundary with probability one;
      // its maximum on the way has the ruin tail P(Y >= y) = (x-a)/(y-a).
      const double a = ab.below->level;
      touch(st, a + (x - a) / rng.uniform01());
      hit = *ab.below;
    } else {
      const double c = ab.above->level;
      touch(st, c - (c - x) / rng.uniform01());
      hit = *ab.above;
    }

    st.value = hit.level;
    touch(st, hit.level);
    if (hit.action == boundary_action::stop) {
      rec.b_T = hit.level;
      rec.m_T = st.max;
      rec.j_T = st.min;
      return rec;
    }
    if (hit.action == boundary_action::advance) {
      st.stage = hit.next_stage;
      st.stage_max = st.stage_min = st.value;
      ++rec.stage_count;
    }
    // A regime event only changes the active barrier row; loop around.
  }
  raise(errc::invalid_step, "exact walk failed to terminate");
}

// ---- Euler engine -----------------------------------------------------------

sample_record euler_path(const stopping_rule& rule, const euler_params& params,
                         rng_stream& rng) {
  if (!(params.dt > 0.0)) raise(errc::invalid_step, "dt must be positive");
  if (!(params.horizon > 0.0)) raise(errc::invalid_step, "horizon must be positive");

  sample_record rec;
  walk_state st{0.0, 0.0, 0.0, 0, 0.0, 0.0};
  const double dt = params.dt;
  const double sdt = std::sqrt(dt);
  const double near_band = 6.0 * sdt;
  const long max_steps = std::lround(params.horizon / dt);
  long step = 0;
  double stopped = 0.0;

  for (;;) {
    if (settle(rule, st, rec.stage_count, stopped)) {
      rec.b_T = stopped;
      rec.m_T = st.max;
      rec.j_T = st.min;
      rec.clock = static_cast<double>(step) * dt;
      return rec;
    }

    // The active boundaries stay fixed until one of them is crossed.
    const active_boundaries ab = boundaries(rule, st);
    const bool has_lo = ab.below.has_value();
    const bool has_hi = ab.above.has_value();
    const double lo = has_lo ? ab.below->level : -k_inf;
    const double hi = has_hi ? ab.above->level : k_inf;

    bool event = false;
    bool hit_above = false;
    boundary hit{};
    double v1 = st.value;
    while (step < max_steps) {
      ++step;
      const double v0 = st.value;
      v1 = v0 + sdt * rng.gaussian();
      if (has_lo && v1 <= lo) {
        hit = *ab.below;
        event = true;
      } else if (has_hi && v1 >= hi) {
        hit = *ab.above;
        hit_above = true;
        event = true;
      } else if (params.bridge_correction) {
        // A bridge between v0 and v1 may still have touched a nearby boundary.
        if (has_lo && v0 - lo < near_band && v1 - lo < near_band &&
            rng.uniform01() < std::exp(-2.0 * (v0 - lo) * (v1 - lo) / dt)) {
          hit = *ab.below;
          event = true;
        } else if (has_hi && hi - v0 < near_band && hi - v1 < near_band &&
                   rng.uniform01() < std::exp(-2.0 * (hi - v0) * (hi - v1) / dt)) {
          hit = *ab.above;
          hit_above = true;
          event = true;
        }
      }
      if (event) break;
      st.value = v1;
      touch(st, v1);
    }

    if (!event) {
      // Horizon reached inside the segment.
      rec.clock = static_cast<double>(step) * dt;
      double dest = 0.0;
      if (unique_destination(rule, st, dest)) {
        rec.b_T = dest;
        touch(st, dest);
      } else {
        rec.b_T = st.value;
        rec.censored = true;
      }
      rec.m_T = st.max;
      rec.j_T = st.min;
      return rec;
    }

    if (hit.action == boundary_action::regime) {
      // The running extreme passed one or more graduation thresholds during
      // the step.  Touch them in order — a newly active row may stop the walk
      // right at its own threshold — then resume from the step endpoint.
      double level = hit.level;
      bool absorbed = false;
      for (;;) {
        st.value = level;
        touch(st, level);
        if (settle(rule, st, rec.stage_count, stopped)) {
          rec.b_T = stopped;
          rec.m_T = st.max;
          rec.j_T = st.min;
          rec.clock = static_cast<double>(step) * dt;
          absorbed = true;
          break;
        }
        const active_boundaries nb = boundaries(rule, st);
        const std::optional<boundary>& side = hit_above ? nb.above : nb.below;
        if (side && side->action == boundary_action::regime &&
            (hit_above ? v1 >= side->level : v1 <= side->level)) {
          level = side->level;
          continue;
        }
        st.value = v1;
        touch(st, v1);
        break;
      }
      if (absorbed) return rec;
      continue;
    }

    // Absorbing contact: the walk is taken at the exact level.
    st.value = hit.level;
    touch(st, hit.level);
    if (hit.action == boundary_action::stop) {
      rec.b_T = hit.level;
      rec.m_T = st.max;
      rec.j_T = st.min;
      rec.clock = static_cast<double>(step) * dt;
      return rec;
    }
    st.stage = hit.next_stage;
    st.stage_max = st.stage_min = st.value;
    ++rec.stage_count;
  }
}

// ---- Monte Carlo driver -----------------------------------------------------

sample_set monte_carlo(const stopping_rule& rule, const monte_carlo_params& params) {
  if (params.n < 1) raise(errc::out_of_domain, "monte_carlo requires n >= 1");
  sample_set set;
  set.master_seed = params.master_seed;
  set.n_requested = params.n;
  set.engine = params.engine;
  set.dt = params.engine == engine_kind::euler ? params.euler.dt : 0.0;
  set.records.resize(params.n);

  const auto run_range = [&](std::size_t first, std::size_t last) {
    for (std::size_t i = first; i < last; ++i) {
      rng_stream rng(params.master_seed, i);
      sample_record rec = params.engine == engine_kind::exact
                              ? exact_walk(rule, rng)
                              : euler_path(rule, params.euler, rng);
      rec.path_index = i;
      set.records[i] = rec;
    }
  };

  unsigned workers = params.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, params.n));

  if (workers <= 1) {
    run_range(0, params.n);
    return set;
  }

  const std::size_t chunk = (params.n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t first = static_cast<std::size_t>(w) * chunk;
    const std::size_t last = std::min(params.n, first + chunk);
    if (first >= last) break;
    pool.emplace_back([&, w, first, last] {
      try {
        run_range(first, last);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return set;
}

// ---- CSV export -------------------------------------------------------------

void write_samples_csv(std::ostream& out, const sample_set& set) {
  const bool with_clock = set.engine == engine_kind::euler;
  out << "path_index,b_T,m_T,j_T,censored,stage_count";
  if (with_clock) out << ",clock";
  out << "\n";
  char buf[160];
  for (const sample_record& r : set.records) {
    int len = std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%d,%d",
                            static_cast<unsigned long long>(r.path_index), r.b_T,
                            r.m_T, r.j_T, r.censored ? 1 : 0, r.stage_count);
    if (with_clock) {
      len += std::snprintf(buf + len, sizeof buf - static_cast<std::size_t>(len),
                           ",%.17g", r.clock);
    }
    out.write(buf, len);
    out.put('\n');
  }
}

}  // namespace skembed
