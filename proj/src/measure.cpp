#include "skembed/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace skembed {

namespace {

constexpr double k_weight_tol = 1e-12;

}  // namespace

target_measure target_measure::from_atoms(std::span<const atom> atoms) {
  std::vector<atom> work(atoms.begin(), atoms.end());
  for (const atom& a : work) {
    if (!std::isfinite(a.value) || !std::isfinite(a.weight)) {
      raise(errc::negative_weight, "atom with non-finite value or weight");
    }
    if (a.weight < 0.0) {
      raise(errc::negative_weight,
            "atom at " + std::to_string(a.value) + " has weight " +
                std::to_string(a.weight));
    }
  }
  std::sort(work.begin(), work.end(),
            [](const atom& a, const atom& b) { return a.value < b.value; });

  target_measure m;
  for (const atom& a : work) {
    if (a.weight == 0.0) continue;
    if (!m.atoms_.empty() && m.atoms_.back().value == a.value) {
      m.atoms_.back().weight += a.weight;
    } else {
      m.atoms_.push_back(a);
    }
  }
  if (m.atoms_.empty()) {
    raise(errc::empty_measure, "no atoms with positive weight");
  }

  double total = 0.0;
  for (const atom& a : m.atoms_) total += a.weight;
  if (std::abs(total - 1.0) > k_weight_tol) {
    for (atom& a : m.atoms_) a.weight /= total;
  }
  double mean = 0.0;
  for (const atom& a : m.atoms_) mean += a.value * a.weight;
  m.mean_ = mean;
  return m;
}

target_measure target_measure::from_atoms(std::initializer_list<atom> atoms) {
  return from_atoms(std::span<const atom>(atoms.begin(), atoms.size()));
}

target_measure target_measure::from_text(std::istream& in) {
  std::vector<atom> atoms;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream fields(line);
    double value = 0.0;
    double weight = 0.0;
    if (!(fields >> value)) {
      raise(errc::config_error,
            "line " + std::to_string(line_no) + ": expected 'value weight'");
    }
    if (!(fields >> weight)) {
      raise(errc::config_error,
            "line " + std::to_string(line_no) + ": expected 'value weight'");
    }
    std::string rest;
    if (fields >> rest) {
      raise(errc::config_error,
            "line " + std::to_string(line_no) + ": trailing field '" + rest + "'");
    }
    atoms.push_back({value, weight});
  }
  return from_atoms(atoms);
}

target_measure target_measure::from_text(const std::string& text) {
  std::istringstream in(text);
  return from_text(in);
}

double target_measure::mass_geq(double x) const noexcept {
  double mass = 0.0;
  for (auto it = atoms_.rbegin(); it != atoms_.rend() && it->value >= x; ++it) {
    mass += it->weight;
  }
  return mass;
}

double target_measure::mass_gt(double x) const noexcept {
  double mass = 0.0;
  for (auto it = atoms_.rbegin(); it != atoms_.rend() && it->value > x; ++it) {
    mass += it->weight;
  }
  return mass;
}

target_measure target_measure::shifted(double delta) const {
  std::vector<atom> moved = atoms_;
  for (atom& a : moved) a.value += delta;
  return from_atoms(moved);
}

target_measure target_measure::reflected() const {
  std::vector<atom> mirrored = atoms_;
  for (atom& a : mirrored) a.value = -a.value;
  return from_atoms(mirrored);
}

quantile_split_result quantile_split(const target_measure& mu, double p, double u) {
  if (!(p > 0.0 && p < 1.0)) {
    raise(errc::quantile_mismatch, "split fraction must lie in (0, 1)");
  }
  const double upper_open = mu.mass_gt(u);
  const double upper_closed = mu.mass_geq(u);
  // Tolerance absorbs round-off when p is derived from tangent geometry.
  constexpr double tol = 1e-9;
  if (p < upper_open - tol || p > upper_closed + tol) {
    raise(errc::quantile_mismatch,
          "fraction " + std::to_string(p) + " outside [" +
              std::to_string(upper_open) + ", " + std::to_string(upper_closed) +
              "], the admissible range at " + std::to_string(u));
  }

  std::vector<atom> up;
  std::vector<atom> down;
  const double at_u = upper_closed - upper_open;
  const double up_share = std::clamp(1.0 - upper_open / p, 0.0, 1.0);
  for (const atom& a : mu.atoms()) {
    if (a.value > u) {
      up.push_back({a.value, a.weight / p});
    } else if (a.value < u) {
      down.push_back({a.value, a.weight / (1.0 - p)});
    }
  }
  if (at_u > 0.0) {
    up.push_back({u, up_share});
    down.push_back({u, std::clamp(1.0 - (1.0 - upper_closed) / (1.0 - p), 0.0, 1.0)});
  }
  return {target_measure::from_atoms(up), target_measure::from_atoms(down)};
}

}  // namespace skembed
