#pragma once

#include <vector>

#include "skembed/exprlang.hpp"
#include "skembed/measure.hpp"
#include "skembed/rng.hpp"
#include "skembed/rules.hpp"
#include "skembed/simulate.hpp"

namespace skembed {

// ---- diffusion description --------------------------------------------------

/// dX = drift(X) dt + vol(X) dW on the open interval (domain_lo, domain_hi),
/// started at 0; vol must be strictly positive on the domain.
struct diffusion_spec {
  scalar_fn drift;
  scalar_fn vol;
  double domain_lo = 0.0;  ///< may be -infinity
  double domain_hi = 0.0;  ///< may be +infinity
};

// ---- scale table ------------------------------------------------------------

/// Tabulated scale function s with s(0) = 0: s'(x) = exp(-int_0^x 2 drift/vol^2),
/// integrated by per-cell Simpson rules on a grid that contains 0 exactly.
/// Beyond the grid the endpoint limits of s over the whole domain are estimated
/// by window-doubling tail quadrature (infinite when the tail fails to settle).
class scale_table {
 public:
  [[nodiscard]] static scale_table build(const diffusion_spec& spec,
                                         double grid_lo, double grid_hi,
                                         std::size_t points);

  /// s(x) by monotone linear interpolation; out_of_range outside the grid.
  [[nodiscard]] double eval(double x) const;

  /// Inverse of eval on the tabulated range; out_of_range outside it.
  [[nodiscard]] double invert(double y) const;

  /// Local slope of the tabulated s in the grid cell containing x.
  [[nodiscard]] double slope_at(double x) const;

  [[nodiscard]] double grid_lo() const noexcept { return xs_.front(); }
  [[nodiscard]] double grid_hi() const noexcept { return xs_.back(); }
  [[nodiscard]] double s_grid_lo() const noexcept { return ys_.front(); }
  [[nodiscard]] double s_grid_hi() const noexcept { return ys_.back(); }
  /// Limit of s at the lower domain endpoint (-infinity when divergent).
  [[nodiscard]] double limit_lo() const noexcept { return limit_lo_; }
  /// Limit of s at the upper domain endpoint (+infinity when divergent).
  [[nodiscard]] double limit_hi() const noexcept { return limit_hi_; }

  [[nodiscard]] const std::vector<double>& xs() const noexcept { return xs_; }
  [[nodiscard]] const std::vector<double>& ys() const noexcept { return ys_; }

 private:
  scale_table() = default;

  std::vector<double> xs_;
  std::vector<double> ys_;
  double limit_lo_ = 0.0;
  double limit_hi_ = 0.0;
};

// ---- embeddability ----------------------------------------------------------

enum class domain_case { recurrent, half_line, bounded };

[[nodiscard]] const char* domain_case_name(domain_case c) noexcept;

/// Which targets admit an embedding, by the shape of the scale image and the
/// pushforward mean m = sum w_i s(x_i): the whole line takes any target; a
/// half-line bounded above needs m >= 0 (bounded below, m <= 0); a bounded
/// image needs m = 0.  Mean comparisons use a 1e-9 tolerance.
struct embeddability {
  domain_case kind = domain_case::recurrent;
  double s_lo = 0.0;       ///< scale-image lower endpoint (-infinity possible)
  double s_hi = 0.0;       ///< scale-image upper endpoint (+infinity possible)
  double scale_mean = 0.0; ///< pushforward mean of the target
  bool embeddable = false;
};

[[nodiscard]] embeddability classify_embeddable(const scale_table& st,
                                                const target_measure& mu_x);

/// Image of the target under s: atoms (s(x_i), w_i).
[[nodiscard]] target_measure pushforward_measure(const scale_table& st,
                                                 const target_measure& mu_x);

// ---- path engine ------------------------------------------------------------

struct diffusion_path {
  sample_record rec;  ///< scale-space record: b_T = s(X_T), extremes of s(X)
  double x_T = 0.0;   ///< stopped point in the original coordinates
  bool domain_exit = false;  ///< left the tabulated grid before stopping
};

/// Euler–Maruyama on X; the rule watches the scale-space walk s(X) and its
/// running extremes.  Stopped values are clamped to exact barrier levels in
/// scale space and mapped back through the inverse table.
[[nodiscard]] diffusion_path euler_diffusion(const diffusion_spec& spec,
                                             const scale_table& st,
                                             const stopping_rule& rule,
                                             const euler_params& params,
                                             rng_stream& rng);

}  // namespace skembed
