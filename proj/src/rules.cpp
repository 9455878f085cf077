#include "skembed/rules.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace skembed {

namespace {

constexpr double k_inf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) raise(errc::config_error, std::string("missing ") + what);
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) {
    raise(errc::config_error, std::string("bad ") + what + " '" + tok + "'");
  }
  return v;
}

int parse_int(std::istream& in, const char* what) {
  int v = 0;
  if (!(in >> v)) raise(errc::config_error, std::string("missing ") + what);
  return v;
}

}  // namespace

const char* rule_kind_name(rule_kind kind) noexcept {
  switch (kind) {
    case rule_kind::extended_ay: return "extended_ay";
    case rule_kind::reflected_ay: return "reflected_ay";
    case rule_kind::two_stage_mod: return "two_stage_mod";
    case rule_kind::hitting: return "hitting";
    case rule_kind::first_exit: return "first_exit";
    case rule_kind::non_minimal_control: return "non_minimal_control";
    case rule_kind::naive_shift: return "naive_shift";
  }
  return "unknown";
}

stopping_rule::stopping_rule(rule_kind kind, std::vector<rule_stage> stages)
    : kind_(kind), stages_(std::move(stages)) {
  if (stages_.empty()) raise(errc::config_error, "rule with no stages");
}

// ---- decisions --------------------------------------------------------------

decision stop_decision(const stopping_rule& rule, const walk_state& state) {
  if (state.stage < 0 || state.stage >= static_cast<int>(rule.stages().size())) {
    raise(errc::out_of_domain, "stage index out of range");
  }
  const rule_stage& stage = rule.stages()[static_cast<std::size_t>(state.stage)];
  decision d;

  if (const auto* ex = std::get_if<exit_stage>(&stage)) {
    if (state.value <= ex->lower) {
      if (ex->next_on_lower == exit_stage::stop_here) {
        return {decision_kind::stop, ex->lower, 0};
      }
      return {decision_kind::advance_stage, ex->lower, ex->next_on_lower};
    }
    if (state.value >= ex->upper) {
      if (ex->next_on_upper == exit_stage::stop_here) {
        return {decision_kind::stop, ex->upper, 0};
      }
      return {decision_kind::advance_stage, ex->upper, ex->next_on_upper};
    }
    return d;
  }

  const auto& ay = std::get<ay_stage>(stage);
  const double extreme =
      ay.sign > 0 ? (ay.stage_local_extremes ? state.stage_max : state.max)
                  : (ay.stage_local_extremes ? state.stage_min : state.min);
  const double w = ay.sign * (state.value - ay.origin);
  const double we = ay.sign * (extreme - ay.origin);
  const double b = ay.table.barrier_at(we);
  if (w <= b) {
    return {decision_kind::stop, ay.origin + ay.sign * b, 0};
  }
  return d;
}

active_boundaries boundaries(const stopping_rule& rule, const walk_state& state) {
  const rule_stage& stage = rule.stages()[static_cast<std::size_t>(state.stage)];
  active_boundaries out;

  if (const auto* ex = std::get_if<exit_stage>(&stage)) {
    if (std::isfinite(ex->lower)) {
      out.below = boundary{ex->lower,
                           ex->next_on_lower == exit_stage::stop_here
                               ? boundary_action::stop
                               : boundary_action::advance,
                           ex->next_on_lower};
    }
    if (std::isfinite(ex->upper)) {
      out.above = boundary{ex->upper,
                           ex->next_on_upper == exit_stage::stop_here
                               ? boundary_action::stop
                               : boundary_action::advance,
                           ex->next_on_upper};
    }
    return out;
  }

  const auto& ay = std::get<ay_stage>(stage);
  const double extreme =
      ay.sign > 0 ? (ay.stage_local_extremes ? state.stage_max : state.max)
                  : (ay.stage_local_extremes ? state.stage_min : state.min);
  const double we = ay.sign * (extreme - ay.origin);
  const auto& rows = ay.table.rows();
  const std::size_t k = ay.table.row_index(we);

  std::optional<boundary> stop_side;
  if (std::isfinite(rows[k].barrier)) {
    stop_side = boundary{ay.origin + ay.sign * rows[k].barrier,
                         boundary_action::stop, -1};
  }
  std::optional<boundary> regime_side;
  if (k + 1 < rows.size()) {
    regime_side = boundary{ay.origin + ay.sign * rows[k + 1].max_threshold,
                           boundary_action::regime, -1};
  }
  if (ay.sign > 0) {
    out.below = stop_side;
    out.above = regime_side;
  } else {
    out.below = regime_side;
    out.above = stop_side;
  }
  return out;
}

// ---- compilers --------------------------------------------------------------

stopping_rule compile_tmax(const target_measure& mu) {
  const potential_function pf = potential_function::build(mu);
  ay_stage stage{pf.table(), +1.0, 0.0, false};
  return stopping_rule(rule_kind::extended_ay, {rule_stage(std::move(stage))});
}

stopping_rule compile_tmin(const target_measure& mu) {
  const potential_function pf = potential_function::build(mu.reflected());
  ay_stage stage{pf.table(), -1.0, 0.0, false};
  return stopping_rule(rule_kind::reflected_ay, {rule_stage(std::move(stage))});
}

stopping_rule compile_hitting(double level) {
  exit_stage stage;
  if (level <= 0.0) {
    stage.lower = level;
    stage.upper = k_inf;
  } else {
    stage.lower = -k_inf;
    stage.upper = level;
  }
  return stopping_rule(rule_kind::hitting, {rule_stage(stage)});
}

stopping_rule compile_first_exit(double a, double b) {
  if (!(a < 0.0 && 0.0 < b)) {
    raise(errc::out_of_domain, "exit interval must straddle the start at 0");
  }
  exit_stage stage{a, b, exit_stage::stop_here, exit_stage::stop_here};
  return stopping_rule(rule_kind::first_exit, {rule_stage(stage)});
}

stopping_rule compile_control(double waypoint, double a, double b) {
  if (!(waypoint > 0.0)) {
    raise(errc::out_of_domain, "waypoint must be positive");
  }
  if (!(a < 0.0 && 0.0 < b)) {
    raise(errc::out_of_domain, "exit interval must straddle the start at 0");
  }
  std::vector<rule_stage> stages;
  stages.emplace_back(exit_stage{-k_inf, waypoint, exit_stage::stop_here, 1});
  stages.emplace_back(exit_stage{0.0, k_inf, 2, exit_stage::stop_here});
  stages.emplace_back(exit_stage{a, b, exit_stage::stop_here, exit_stage::stop_here});
  return stopping_rule(rule_kind::non_minimal_control, std::move(stages));
}

stopping_rule compile_naive(const target_measure& mu) {
  const double m = mu.mean();
  const potential_function centred = potential_function::build(mu.shifted(-m));
  std::vector<rule_stage> stages;
  if (m == 0.0) {
    stages.emplace_back(ay_stage{centred.table(), +1.0, 0.0, false});
  } else {
    exit_stage reach_mean;
    if (m < 0.0) {
      reach_mean = {m, k_inf, 1, exit_stage::stop_here};
    } else {
      reach_mean = {-k_inf, m, exit_stage::stop_here, 1};
    }
    stages.emplace_back(reach_mean);
    stages.emplace_back(ay_stage{centred.table(), +1.0, m, true});
  }
  return stopping_rule(rule_kind::naive_shift, std::move(stages));
}

stopping_rule compile_tmod(const target_measure& mu, const scalar_fn& h_normalized) {
  if (mu.mean() < 0.0) {
    raise(errc::mean_sign, "two-stage rule requires a non-negative target mean");
  }
  const potential_function pf = potential_function::build(mu);
  const double theta0 = theta_zero(pf, h_normalized);
  const tangent_frame f = pf.frame(theta0);

  std::vector<rule_stage> stages;

  auto upper_stage = [&](const target_measure& part, double start) {
    const potential_function sub = potential_function::build(part.shifted(-start));
    return ay_stage{sub.table(), +1.0, start, false};
  };
  auto lower_stage = [&](const target_measure& part, double start) {
    // Mirror image of the upper branch: recentre at the entry point, reflect,
    // and drive the reflected walk with the usual max rule.
    const potential_function sub =
        potential_function::build(part.shifted(-start).reflected());
    return ay_stage{sub.table(), -1.0, start, false};
  };

  if (!std::isfinite(f.z_minus)) {
    // theta0 = -1 with positive mean: the first stage is a pure passage to
    // z_plus and the whole mass goes through the upper branch.
    stages.emplace_back(exit_stage{-k_inf, f.z_plus, exit_stage::stop_here, 1});
    stages.emplace_back(upper_stage(mu, f.z_plus));
    return stopping_rule(rule_kind::two_stage_mod, std::move(stages));
  }
  if (!std::isfinite(f.z_plus)) {
    stages.emplace_back(exit_stage{-f.z_minus, k_inf, 1, exit_stage::stop_here});
    stages.emplace_back(lower_stage(mu, -f.z_minus));
    return stopping_rule(rule_kind::two_stage_mod, std::move(stages));
  }

  const double p_geom = f.z_minus / (f.z_plus + f.z_minus);
  const double p_theta = 0.5 * (1.0 - theta0);
  if (std::abs(p_geom - p_theta) > 1e-10) {
    raise(errc::out_of_domain,
          "inconsistent branch probability: geometry " + fmt(p_geom) +
              " vs slope " + fmt(p_theta));
  }

  if (p_geom >= 1.0 - 1e-15 || f.z_minus == 0.0 || p_geom <= 1e-15) {
    // Collapsed interval: one branch carries everything.
    if (p_geom >= 0.5) {
      stages.emplace_back(exit_stage{-k_inf, f.z_plus, exit_stage::stop_here, 1});
      stages.emplace_back(upper_stage(mu, f.z_plus));
    } else {
      stages.emplace_back(exit_stage{-f.z_minus, k_inf, 1, exit_stage::stop_here});
      stages.emplace_back(lower_stage(mu, -f.z_minus));
    }
    return stopping_rule(rule_kind::two_stage_mod, std::move(stages));
  }

  const quantile_split_result split = quantile_split(mu, p_geom, f.u);
  stages.emplace_back(exit_stage{-f.z_minus, f.z_plus, 2, 1});
  stages.emplace_back(upper_stage(split.upper, f.z_plus));
  stages.emplace_back(lower_stage(split.lower, -f.z_minus));
  return stopping_rule(rule_kind::two_stage_mod, std::move(stages));
}

// ---- serialization ----------------------------------------------------------

std::string stopping_rule::serialize() const {
  std::ostringstream out;
  out << "rule " << rule_kind_name(kind_) << "\n";
  out << "stages " << stages_.size() << "\n";
  for (const rule_stage& stage : stages_) {
    if (const auto* ex = std::get_if<exit_stage>(&stage)) {
      out << "exit " << fmt(ex->lower) << " " << fmt(ex->upper) << " "
          << ex->next_on_lower << " " << ex->next_on_upper << "\n";
    } else {
      const auto& ay = std::get<ay_stage>(stage);
      out << "ay " << fmt(ay.sign) << " " << fmt(ay.origin) << " "
          << (ay.stage_local_extremes ? 1 : 0) << " " << ay.table.rows().size()
          << "\n";
      for (const barrier_row& row : ay.table.rows()) {
        out << "row " << fmt(row.max_threshold) << " " << fmt(row.barrier) << "\n";
      }
    }
  }
  return out.str();
}

stopping_rule stopping_rule::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  if (!(in >> tok) || tok != "rule") raise(errc::config_error, "expected 'rule'");
  std::string kind_name;
  in >> kind_name;
  rule_kind kind = rule_kind::extended_ay;
  bool found = false;
  for (rule_kind k : {rule_kind::extended_ay, rule_kind::reflected_ay,
                      rule_kind::two_stage_mod, rule_kind::hitting,
                      rule_kind::first_exit, rule_kind::non_minimal_control,
                      rule_kind::naive_shift}) {
    if (kind_name == rule_kind_name(k)) {
      kind = k;
      found = true;
    }
  }
  if (!found) raise(errc::config_error, "unknown rule kind '" + kind_name + "'");
  if (!(in >> tok) || tok != "stages") raise(errc::config_error, "expected 'stages'");
  const int n = parse_int(in, "stage count");
  std::vector<rule_stage> stages;
  for (int i = 0; i < n; ++i) {
    if (!(in >> tok)) raise(errc::config_error, "missing stage");
    if (tok == "exit") {
      exit_stage ex;
      ex.lower = parse_double(in, "lower");
      ex.upper = parse_double(in, "upper");
      ex.next_on_lower = parse_int(in, "next_on_lower");
      ex.next_on_upper = parse_int(in, "next_on_upper");
      stages.emplace_back(ex);
    } else if (tok == "ay") {
      const double sign = parse_double(in, "sign");
      const double origin = parse_double(in, "origin");
      const int local = parse_int(in, "locality flag");
      const int rows_n = parse_int(in, "row count");
      std::vector<barrier_row> rows;
      for (int r = 0; r < rows_n; ++r) {
        if (!(in >> tok) || tok != "row") raise(errc::config_error, "expected 'row'");
        const double thr = parse_double(in, "threshold");
        const double bar = parse_double(in, "barrier");
        rows.push_back({thr, bar});
      }
      stages.emplace_back(ay_stage{barrier_table(std::move(rows)), sign, origin, local != 0});
    } else {
      raise(errc::config_error, "unknown stage kind '" + tok + "'");
    }
  }
  return stopping_rule(kind, std::move(stages));
}

}  // namespace skembed
