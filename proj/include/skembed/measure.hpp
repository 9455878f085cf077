#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "skembed/errors.hpp"

namespace skembed {

/// A point mass: weight at value.
struct atom {
  double value = 0.0;
  double weight = 0.0;
};

/// Finitely supported probability measure on the real line.
///
/// Atoms are kept sorted by value, duplicates merged, zero-weight atoms
/// dropped, and weights normalised to total mass one.  Construction fails with
/// empty_measure / negative_weight when the input admits no such normalisation.
class target_measure {
public:
  static target_measure from_atoms(std::span<const atom> atoms);
  static target_measure from_atoms(std::initializer_list<atom> atoms);

  /// Parses the plain-text format: one "value weight" pair per line,
  /// '#' starts a comment, blank lines ignored.
  static target_measure from_text(std::istream& in);
  static target_measure from_text(const std::string& text);

  [[nodiscard]] const std::vector<atom>& atoms() const noexcept { return atoms_; }
  [[nodiscard]] std::size_t size() const noexcept { return atoms_.size(); }
  [[nodiscard]] double support_lo() const noexcept { return atoms_.front().value; }
  [[nodiscard]] double support_hi() const noexcept { return atoms_.back().value; }

  [[nodiscard]] double mean() const noexcept { return mean_; }

  /// Mass of [x, infinity).
  [[nodiscard]] double mass_geq(double x) const noexcept;
  /// Mass of (x, infinity).
  [[nodiscard]] double mass_gt(double x) const noexcept;

  /// Translates every atom by delta.
  [[nodiscard]] target_measure shifted(double delta) const;
  /// Reflects the measure through the origin (atom x becomes -x).
  [[nodiscard]] target_measure reflected() const;

private:
  target_measure() = default;

  std::vector<atom> atoms_;
  double mean_ = 0.0;
};

/// Result of splitting a measure at a point u into upper/lower conditioned
/// parts with masses p and 1-p.
struct quantile_split_result {
  target_measure upper;  ///< supported on [u, inf)
  target_measure lower;  ///< supported on (-inf, u]
};

/// Splits mu at u so that the upper part carries mass fraction p.
///
/// upper is mu conditioned to the closed upper p-quantile: atoms above u keep
/// weight w/p, the atom at u receives 1 - mass_gt(u)/p.  lower mirrors this
/// below u with mass 1-p.  Requires 0 < p < 1 and
/// mass_gt(u) <= p <= mass_geq(u) (within a small tolerance); raises
/// quantile_mismatch otherwise.
quantile_split_result quantile_split(const target_measure& mu, double p, double u);

}  // namespace skembed
