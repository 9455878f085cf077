#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "skembed/rng.hpp"
#include "skembed/rules.hpp"

namespace skembed {

// ---- sample records ---------------------------------------------------------

/// Outcome of one simulated path, started at 0.
struct sample_record {
  std::uint64_t path_index = 0;
  double b_T = 0.0;  ///< stopped value
  double m_T = 0.0;  ///< running maximum up to the stop
  double j_T = 0.0;  ///< running minimum up to the stop
  bool censored = false;  ///< the horizon cut the path short (Euler engines)
  int stage_count = 1;    ///< stages entered, at least 1
  double clock = 0.0;     ///< elapsed time in steps x dt; 0 for the exact engine
};

enum class engine_kind { exact, euler };

/// A reproducible batch of paths: a pure function of (rule, seed, engine
/// parameters, n) regardless of how many workers produced it.
struct sample_set {
  std::vector<sample_record> records;
  std::uint64_t master_seed = 0;
  std::size_t n_requested = 0;
  engine_kind engine = engine_kind::exact;
  double dt = 0.0;  ///< 0 for the exact engine

  [[nodiscard]] std::size_t censored_count() const noexcept;
};

// ---- engines ----------------------------------------------------------------

/// Event-driven walk with no discretisation error.
///
/// Between boundary events the walk lives in a segment where the active
/// boundaries are constant.  Each event draws the exit side by the ruin
/// probability (x - a) / (c - a) and then the extreme on the opposite side of
/// the segment from its exact conditional law by inverse transform, so the
/// joint law of (stopped value, running max, running min) is sampled without
/// bias and stopped values land exactly on barrier levels.
[[nodiscard]] sample_record exact_walk(const stopping_rule& rule, rng_stream& rng);

struct euler_params {
  double dt = 1e-4;
  double horizon = 1e4;
  bool bridge_correction = true;
};

/// Gaussian-increment walk with optional Brownian-bridge crossing correction.
///
/// Crossings are resolved against both active boundaries; on an absorbing
/// event the value is clamped to the exact boundary level.  If the horizon is
/// reached while the rule's current regime admits exactly one reachable
/// stopping level, the eventual stopped value is deterministic and the record
/// is finalised there instead of being censored.
[[nodiscard]] sample_record euler_path(const stopping_rule& rule,
                                       const euler_params& params,
                                       rng_stream& rng);

// ---- driver -----------------------------------------------------------------

struct monte_carlo_params {
  std::size_t n = 0;
  std::uint64_t master_seed = 1;
  engine_kind engine = engine_kind::exact;
  euler_params euler;   ///< used when engine == euler
  unsigned workers = 0; ///< 0 = hardware concurrency
};

/// Runs n independent paths.  Path i draws from a counter-derived stream keyed
/// by (master_seed, i) and lands in slot i, so the result does not depend on
/// the worker count.
[[nodiscard]] sample_set monte_carlo(const stopping_rule& rule,
                                     const monte_carlo_params& params);

/// CSV export: `path_index,b_T,m_T,j_T,censored,stage_count[,clock]`; the
/// clock column is present only for Euler sample sets.  17 significant digits.
void write_samples_csv(std::ostream& out, const sample_set& set);

}  // namespace skembed
