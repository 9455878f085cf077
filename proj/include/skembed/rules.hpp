#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "skembed/potential.hpp"

namespace skembed {

enum class rule_kind {
  extended_ay,          ///< barrier rule on the running max (any target mean)
  reflected_ay,         ///< the same rule run against the negated path
  two_stage_mod,        ///< symmetric first exit, then a one-sided sub-rule
  hitting,              ///< first passage of a level
  first_exit,           ///< first exit of an interval straddling the start
  non_minimal_control,  ///< waypoint, back to the start, then first exit
  naive_shift,          ///< first passage of the mean, then the centred barrier rule
};

[[nodiscard]] const char* rule_kind_name(rule_kind kind) noexcept;

/// Stage that ends by leaving (lower, upper); each side either stops the walk
/// or hands over to another stage.
struct exit_stage {
  double lower = 0.0;
  double upper = 0.0;
  int next_on_lower = -1;  ///< stage index, or stop_here
  int next_on_upper = -1;
  static constexpr int stop_here = -1;
};

/// Terminal stage driven by a barrier table.  Local coordinates
/// w = sign * (v - origin); the table argument is the running extreme of w
/// (max of v for sign +1, min of v for sign -1), taken since the stage was
/// entered when stage_local_extremes is set, otherwise over the whole walk.
struct ay_stage {
  barrier_table table;
  double sign = 1.0;
  double origin = 0.0;
  bool stage_local_extremes = false;
};

using rule_stage = std::variant<exit_stage, ay_stage>;

/// A compiled stopping rule: a small stage machine evaluated against the path
/// value and its running extremes only, never against time or path history.
class stopping_rule {
public:
  stopping_rule(rule_kind kind, std::vector<rule_stage> stages);

  [[nodiscard]] rule_kind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::vector<rule_stage>& stages() const noexcept { return stages_; }

  [[nodiscard]] std::string serialize() const;
  static stopping_rule deserialize(const std::string& text);

private:
  rule_kind kind_;
  std::vector<rule_stage> stages_;
};

/// Walk state a rule may inspect.  stage_max / stage_min restart at stage
/// entry and matter only for stages with stage_local_extremes.
struct walk_state {
  double value = 0.0;
  double max = 0.0;
  double min = 0.0;
  int stage = 0;
  double stage_max = 0.0;
  double stage_min = 0.0;
};

enum class decision_kind { keep_going, stop, advance_stage };

struct decision {
  decision_kind kind = decision_kind::keep_going;
  double level = 0.0;  ///< stop value, or the boundary crossed on advance
  int next_stage = 0;  ///< advance only
};

/// Evaluates the rule at one state.  Pure; engines call this each step and
/// re-call after applying an advance.
[[nodiscard]] decision stop_decision(const stopping_rule& rule, const walk_state& state);

/// What crossing a boundary does to the walk.
enum class boundary_action {
  stop,    ///< stop exactly at the level
  advance, ///< move to another stage
  regime,  ///< same stage, the running extreme passes a table threshold
};

struct boundary {
  double level = 0.0;
  boundary_action action = boundary_action::stop;
  int next_stage = -1;  ///< advance only
};

/// The active boundaries below and above the current value; absent when the
/// corresponding side is unbounded.  Both engines walk segment by segment
/// between these levels.
struct active_boundaries {
  std::optional<boundary> below;
  std::optional<boundary> above;
};

[[nodiscard]] active_boundaries boundaries(const stopping_rule& rule, const walk_state& state);

// ---- compilers --------------------------------------------------------------

/// Barrier rule embedding mu, sharp for the law of the running max.
[[nodiscard]] stopping_rule compile_tmax(const target_measure& mu);

/// The reflection of compile_tmax(reflected mu): sharp for the running min.
[[nodiscard]] stopping_rule compile_tmin(const target_measure& mu);

/// Two-stage rule for a non-negative-mean target: first exit of
/// (-z_minus, z_plus) at the crossing slope theta_zero, then the max-sharp
/// rule on the upper branch and the min-sharp rule on the lower branch, each
/// embedding the matching conditioned part of mu.  h must be normalized.
/// Raises mean_sign when mean(mu) < 0.
[[nodiscard]] stopping_rule compile_tmod(const target_measure& mu, const scalar_fn& h_normalized);

/// First passage of the given level from the start at 0.
[[nodiscard]] stopping_rule compile_hitting(double level);

/// First exit of (a, b); requires a < 0 < b.
[[nodiscard]] stopping_rule compile_first_exit(double a, double b);

/// Deliberately wasteful embedding for diagnostics: reach waypoint w > 0,
/// come back to 0, then first exit of (a, b).
[[nodiscard]] stopping_rule compile_control(double waypoint, double a, double b);

/// Reference competitor: first passage of the mean, then the centred barrier
/// rule for the recentred target.
[[nodiscard]] stopping_rule compile_naive(const target_measure& mu);

}  // namespace skembed
