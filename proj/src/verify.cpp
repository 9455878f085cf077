#include "skembed/verify.hpp"

#include <algorithm>
#include <cmath>

namespace skembed {

namespace {

/// Uncensored stopped values, sorted ascending.
std::vector<double> sorted_values(const sample_set& samples) {
  std::vector<double> out;
  out.reserve(samples.records.size());
  for (const sample_record& r : samples.records) {
    if (!r.censored) out.push_back(r.b_T);
  }
  if (out.empty()) raise(errc::no_samples, "no uncensored records");
  std::sort(out.begin(), out.end());
  return out;
}

double empirical_cdf(const std::vector<double>& sorted, double t) {
  return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) -
                             sorted.begin()) /
         static_cast<double>(sorted.size());
}

double empirical_cdf_left(const std::vector<double>& sorted, double t) {
  return static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), t) -
                             sorted.begin()) /
         static_cast<double>(sorted.size());
}

tail_orientation resolve_orientation(const target_measure& mu,
                                     tail_orientation requested) {
  const double m = mu.mean();
  if (requested == tail_orientation::automatic) {
    return m > 0.0 ? tail_orientation::upper : tail_orientation::lower;
  }
  if (requested == tail_orientation::lower && m > 0.0) {
    raise(errc::wrong_orientation,
          "lower-tail diagnostic requested for a positive-mean target");
  }
  if (requested == tail_orientation::upper && m < 0.0) {
    raise(errc::wrong_orientation,
          "upper-tail diagnostic requested for a negative-mean target");
  }
  return requested;
}

}  // namespace

// ---- distances --------------------------------------------------------------

double dkw_epsilon(std::size_t n, double delta) {
  if (n == 0) raise(errc::no_samples, "DKW band needs n >= 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    raise(errc::out_of_domain, "DKW confidence level must be in (0, 1)");
  }
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

double ks_distance(const sample_set& samples, const target_measure& mu) {
  const std::vector<double> values = sorted_values(samples);
  std::vector<double> candidates;
  candidates.reserve(mu.atoms().size() + values.size());
  for (const atom& a : mu.atoms()) candidates.push_back(a.value);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == 0 || values[i] != values[i - 1]) candidates.push_back(values[i]);
  }
  double d = 0.0;
  for (double t : candidates) {
    const double target_cdf = 1.0 - mu.mass_gt(t);
    const double target_left = 1.0 - mu.mass_geq(t);
    d = std::max(d, std::abs(empirical_cdf(values, t) - target_cdf));
    d = std::max(d, std::abs(empirical_cdf_left(values, t) - target_left));
  }
  return d;
}

double wasserstein1(const sample_set& samples, const target_measure& mu) {
  const std::vector<double> values = sorted_values(samples);
  std::vector<double> breaks;
  breaks.reserve(mu.atoms().size() + values.size());
  for (const atom& a : mu.atoms()) breaks.push_back(a.value);
  for (double v : values) breaks.push_back(v);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double w = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double gap = breaks[i + 1] - breaks[i];
    const double diff =
        std::abs(empirical_cdf(values, breaks[i]) - (1.0 - mu.mass_gt(breaks[i])));
    w += diff * gap;
  }
  return w;
}

// ---- max-law sharpness ------------------------------------------------------

max_law_result max_law_sharpness(const sample_set& samples,
                                 const potential_function& pf,
                                 const std::vector<double>& x_grid) {
  std::size_t n = 0;
  for (const sample_record& r : samples.records) n += r.censored ? 0 : 1;
  if (n == 0) raise(errc::no_samples, "no uncensored records");

  max_law_result out;
  out.curve.reserve(x_grid.size());
  for (double x : x_grid) {
    std::size_t hits = 0;
    for (const sample_record& r : samples.records) {
      if (!r.censored && r.m_T >= x) ++hits;
    }
    max_law_point p;
    p.x = x;
    p.empirical = static_cast<double>(hits) / static_cast<double>(n);
    p.bound = pf.max_law_bound(x);
    p.deviation = std::abs(p.empirical - p.bound);
    out.max_abs_dev = std::max(out.max_abs_dev, p.deviation);
    out.curve.push_back(p);
  }
  return out;
}

// ---- minimality diagnostics -------------------------------------------------

std::vector<minimality_point> minimality_diagnostic(
    const sample_set& samples, const target_measure& mu,
    const std::vector<double>& gamma_grid, tail_orientation orientation) {
  const tail_orientation side = resolve_orientation(mu, orientation);
  std::size_t n = 0;
  for (const sample_record& r : samples.records) n += r.censored ? 0 : 1;
  if (n == 0) raise(errc::no_samples, "no uncensored records");

  std::vector<minimality_point> out;
  out.reserve(gamma_grid.size());
  for (double gamma : gamma_grid) {
    std::size_t hits = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const sample_record& r : samples.records) {
      if (r.censored) continue;
      double v = 0.0;
      if (side == tail_orientation::lower) {
        if (r.j_T <= -gamma) {
          ++hits;
          v = -gamma - r.b_T;
        }
      } else {
        if (r.m_T >= gamma) {
          ++hits;
          v = r.b_T - gamma;
        }
      }
      sum += v;
      sum_sq += v * v;
    }
    minimality_point p;
    p.gamma = gamma;
    const double nn = static_cast<double>(n);
    p.gamma_p = gamma * static_cast<double>(hits) / nn;
    p.slack = sum / nn;
    const double var = std::max(0.0, sum_sq / nn - p.slack * p.slack);
    p.slack_stderr = std::sqrt(var / nn);
    out.push_back(p);
  }
  return out;
}

// ---- stopped-mean identity --------------------------------------------------

std::vector<stopped_mean_point> stopped_mean_curve(
    const sample_set& samples, const target_measure& mu,
    const std::vector<double>& x_grid) {
  const bool mirrored = mu.mean() > 0.0;
  std::size_t n = 0;
  for (const sample_record& r : samples.records) n += r.censored ? 0 : 1;
  if (n == 0) raise(errc::no_samples, "no uncensored records");

  std::vector<stopped_mean_point> out;
  out.reserve(x_grid.size());
  for (double x : x_grid) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const sample_record& r : samples.records) {
      if (r.censored) continue;
      double v;
      if (!mirrored) {
        v = r.m_T >= x ? x : r.b_T;
      } else {
        v = r.j_T <= -x ? -x : r.b_T;
      }
      sum += v;
      sum_sq += v * v;
    }
    stopped_mean_point p;
    p.x = x;
    const double nn = static_cast<double>(n);
    p.mean = sum / nn;
    const double var = std::max(0.0, sum_sq / nn - p.mean * p.mean);
    p.std_err = std::sqrt(var / nn);
    out.push_back(p);
  }
  return out;
}

// ---- default grids ----------------------------------------------------------

std::vector<double> default_gamma_grid() { return {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}; }

std::vector<double> default_x_grid(const target_measure& mu) {
  const double top = std::max(2.0 * mu.support_hi(), 4.0);
  std::vector<double> grid(20);
  for (int j = 0; j < 20; ++j) {
    grid[static_cast<std::size_t>(19 - j)] = top * std::pow(2.0, -0.5 * j);
  }
  return grid;
}

// ---- assembled report -------------------------------------------------------

verification_report run_verification(const sample_set& samples,
                                     const target_measure& mu,
                                     const potential_function* pf,
                                     const verification_params& params) {
  verification_report rep;
  const std::vector<double> gammas =
      params.gamma_grid.empty() ? default_gamma_grid() : params.gamma_grid;
  const std::vector<double> xs =
      params.x_grid.empty() ? default_x_grid(mu) : params.x_grid;

  rep.ks = ks_distance(samples, mu);
  rep.w1 = wasserstein1(samples, mu);
  rep.minimality = minimality_diagnostic(samples, mu, gammas);
  rep.stopped_mean = stopped_mean_curve(samples, mu, xs);
  rep.censored_fraction =
      samples.n_requested == 0
          ? 0.0
          : static_cast<double>(samples.censored_count()) /
                static_cast<double>(samples.n_requested);

  rep.ks_check = {true, rep.ks <= params.ks_threshold, rep.ks, params.ks_threshold};

  if (pf != nullptr) {
    rep.max_law = max_law_sharpness(samples, *pf, xs);
    rep.max_law_check = {true, rep.max_law.max_abs_dev <= params.max_law_threshold,
                         rep.max_law.max_abs_dev, params.max_law_threshold};
  } else {
    rep.max_law_check = {false, true, 0.0, params.max_law_threshold};
  }

  const double top_gamma_p = rep.minimality.empty() ? 0.0 : rep.minimality.back().gamma_p;
  rep.minimality_check = {true, top_gamma_p <= params.minimality_threshold,
                          top_gamma_p, params.minimality_threshold};

  double worst_ratio = 0.0;
  for (const stopped_mean_point& p : rep.stopped_mean) {
    const double band = 3.0 * p.std_err;
    const double ratio = band > 0.0
                             ? std::abs(p.mean) / band
                             : (std::abs(p.mean) == 0.0 ? 0.0 : 1e300);
    worst_ratio = std::max(worst_ratio, ratio);
  }
  rep.stopped_mean_check = {true, worst_ratio <= 1.0, worst_ratio, 1.0};

  rep.overall = rep.ks_check.pass && rep.max_law_check.pass &&
                rep.minimality_check.pass && rep.stopped_mean_check.pass;
  return rep;
}

}  // namespace skembed
