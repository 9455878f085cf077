#pragma once

#include <stdexcept>
#include <string>

namespace skembed {

/// Failure categories surfaced by the library.  Each value corresponds to a
/// precondition or runtime condition that callers can branch on.
enum class errc {
  empty_measure,      ///< no atoms / no positive-weight atoms
  negative_weight,    ///< an atom weight is negative
  quantile_mismatch,  ///< split fraction incompatible with the mass at the split point
  out_of_domain,      ///< evaluation point outside the tabulated domain
  no_crossing,        ///< the two-sided crossing condition never holds on [-1, 1]
  mean_sign,          ///< rule requires a target mean of the opposite sign
  unbounded_segment,  ///< walk segment with no finite boundary on either side
  invalid_step,       ///< non-positive step size or horizon
  quadrature_overflow,///< integrand exponent exceeds the representable range
  out_of_range,       ///< scale value outside the tabulated range
  no_samples,         ///< statistic requested on an empty sample set
  wrong_orientation,  ///< diagnostic orientation conflicts with the target mean sign
  syntax_error,       ///< expression text failed to parse
  domain_error,       ///< expression evaluated outside its mathematical domain
  config_error,       ///< malformed or incomplete configuration
};

[[nodiscard]] const char* errc_name(errc code) noexcept;

/// Exception carrying an errc plus a human-readable message.
class error : public std::runtime_error {
public:
  error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  [[nodiscard]] errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw error(code, message);
}

inline const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::empty_measure: return "empty_measure";
    case errc::negative_weight: return "negative_weight";
    case errc::quantile_mismatch: return "quantile_mismatch";
    case errc::out_of_domain: return "out_of_domain";
    case errc::no_crossing: return "no_crossing";
    case errc::mean_sign: return "mean_sign";
    case errc::unbounded_segment: return "unbounded_segment";
    case errc::invalid_step: return "invalid_step";
    case errc::quadrature_overflow: return "quadrature_overflow";
    case errc::out_of_range: return "out_of_range";
    case errc::no_samples: return "no_samples";
    case errc::wrong_orientation: return "wrong_orientation";
    case errc::syntax_error: return "syntax_error";
    case errc::domain_error: return "domain_error";
    case errc::config_error: return "config_error";
  }
  return "unknown";
}

}  // namespace skembed
