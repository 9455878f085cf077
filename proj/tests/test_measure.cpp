#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "skembed/errors.hpp"
#include "skembed/measure.hpp"

using namespace skembed;

namespace {

target_measure centred_two_point() {
  return target_measure::from_atoms({{-1.0, 0.5}, {1.0, 0.5}});
}

target_measure negative_mean_two_point() {
  return target_measure::from_atoms({{-2.0, 0.5}, {0.0, 0.5}});
}

}  // namespace

TEST_CASE("construction normalises weights") {
  const target_measure mu = target_measure::from_atoms({{-1.0, 1.0}, {1.0, 1.0}});
  REQUIRE(mu.size() == 2);
  CHECK(mu.atoms()[0].value == -1.0);
  CHECK(mu.atoms()[0].weight == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mu.atoms()[1].weight == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("construction sorts atoms by value") {
  const target_measure mu = target_measure::from_atoms({{2.0, 0.5}, {0.0, 0.5}});
  CHECK(mu.atoms()[0].value == 0.0);
  CHECK(mu.atoms()[1].value == 2.0);
  CHECK(mu.support_lo() == 0.0);
  CHECK(mu.support_hi() == 2.0);
}

TEST_CASE("construction merges duplicate values") {
  const target_measure mu = target_measure::from_atoms({{1.0, 0.3}, {1.0, 0.7}});
  REQUIRE(mu.size() == 1);
  CHECK(mu.atoms()[0].value == 1.0);
  CHECK(mu.atoms()[0].weight == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("construction rejects empty and non-positive input") {
  try {
    (void)target_measure::from_atoms(std::initializer_list<atom>{});
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::empty_measure);
  }
  try {
    (void)target_measure::from_atoms({{0.0, -0.5}, {1.0, 1.5}});
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::negative_weight);
  }
  // A lone zero-weight atom is dropped, leaving nothing to normalise.
  try {
    (void)target_measure::from_atoms({{0.0, 0.0}});
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::empty_measure);
  }
}

TEST_CASE("mean of the worked measures") {
  CHECK(centred_two_point().mean() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(negative_mean_two_point().mean() == doctest::Approx(-1.0).epsilon(1e-14));
  const target_measure pos = target_measure::from_atoms({{0.0, 0.5}, {2.0, 0.5}});
  CHECK(pos.mean() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("closed upper tail mass") {
  const target_measure mu = centred_two_point();
  CHECK(mu.mass_geq(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mu.mass_geq(-1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mu.mass_geq(1.5) == 0.0);
  // Strict version differs from the closed one exactly at atoms.
  CHECK(mu.mass_gt(-1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mu.mass_gt(1.0) == 0.0);
  CHECK(mu.mass_gt(0.0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("tail mass is a non-increasing step function jumping at atoms") {
  const target_measure mu =
      target_measure::from_atoms({{-2.0, 0.1}, {-1.0, 0.25}, {0.5, 0.3}, {1.0, 0.2}, {3.0, 0.15}});
  double previous = 1.0;
  for (double x = -3.0; x <= 4.0; x += 0.01) {
    const double here = mu.mass_geq(x);
    CHECK(here <= previous + 1e-15);
    previous = here;
  }
  // Constant strictly between consecutive atoms.
  CHECK(mu.mass_geq(-0.9) == mu.mass_geq(0.4));
  CHECK(mu.mass_geq(1.1) == mu.mass_geq(2.9));
}

TEST_CASE("text ingestion parses values, weights and comments") {
  std::istringstream in(
      "# a two-point law\n"
      "-1 0.5\n"
      "\n"
      "1 0.5   # trailing comment\n");
  const target_measure mu = target_measure::from_text(in);
  REQUIRE(mu.size() == 2);
  CHECK(mu.atoms()[0].value == -1.0);
  CHECK(mu.mean() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("text ingestion rejects malformed lines and empty input") {
  try {
    (void)target_measure::from_text("0.5\n");
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::config_error);
  }
  try {
    (void)target_measure::from_text("one two\n");
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::config_error);
  }
  try {
    (void)target_measure::from_text("# only a comment\n");
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::empty_measure);
  }
}

TEST_CASE("shift and reflection transforms") {
  const target_measure mu = negative_mean_two_point();
  const target_measure shifted = mu.shifted(1.0);
  CHECK(shifted.atoms()[0].value == -1.0);
  CHECK(shifted.atoms()[1].value == 1.0);
  CHECK(shifted.mean() == doctest::Approx(0.0).epsilon(1e-14));
  const target_measure reflected = mu.reflected();
  CHECK(reflected.atoms()[0].value == 0.0);
  CHECK(reflected.atoms()[1].value == 2.0);
  CHECK(reflected.mean() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("quantile split of the worked positive-mean law") {
  const target_measure mu = target_measure::from_atoms({{0.0, 0.5}, {2.0, 0.5}});
  const quantile_split_result split = quantile_split(mu, 0.5, 0.0);
  REQUIRE(split.upper.size() == 1);
  CHECK(split.upper.atoms()[0].value == 2.0);
  REQUIRE(split.lower.size() == 1);
  CHECK(split.lower.atoms()[0].value == 0.0);
}

TEST_CASE("quantile split at an atom with exactly matching strict mass") {
  const target_measure mu = centred_two_point();
  const quantile_split_result split = quantile_split(mu, 0.5, -1.0);
  REQUIRE(split.upper.size() == 1);
  CHECK(split.upper.atoms()[0].value == 1.0);
  REQUIRE(split.lower.size() == 1);
  CHECK(split.lower.atoms()[0].value == -1.0);
}

TEST_CASE("quantile split of a point mass returns the point twice") {
  const target_measure mu = target_measure::from_atoms({{0.0, 1.0}});
  const quantile_split_result split = quantile_split(mu, 0.5, 0.0);
  REQUIRE(split.upper.size() == 1);
  CHECK(split.upper.atoms()[0].value == 0.0);
  REQUIRE(split.lower.size() == 1);
  CHECK(split.lower.atoms()[0].value == 0.0);
}

TEST_CASE("quantile split rejects an inconsistent split point") {
  const target_measure mu = centred_two_point();
  try {
    (void)quantile_split(mu, 0.25, -1.0);  // strict upper mass 0.5 > p
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::quantile_mismatch);
  }
  try {
    (void)quantile_split(mu, 0.75, 1.0);  // closed upper mass 0.5 < p
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::quantile_mismatch);
  }
}

TEST_CASE("quantile split reconstructs the measure and orders the means") {
  const target_measure mu =
      target_measure::from_atoms({{-2.0, 0.1}, {-1.0, 0.25}, {0.5, 0.3}, {1.0, 0.2}, {3.0, 0.15}});
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(0.01, 0.99);
  int tried = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const double p = unif(gen);
    // Valid split points u for this p satisfy mass_gt(u) <= p <= mass_geq(u).
    double u = 0.0;
    bool found = false;
    for (const atom& a : mu.atoms())
      if (mu.mass_gt(a.value) <= p + 1e-12 && p <= mu.mass_geq(a.value) + 1e-12) {
        u = a.value;
        found = true;
        break;
      }
    if (!found) continue;
    ++tried;
    const quantile_split_result split = quantile_split(mu, p, u);
    // p * upper + (1 - p) * lower must rebuild mu atom-by-atom.
    for (const atom& a : mu.atoms()) {
      const double rebuilt = p * (split.upper.mass_geq(a.value) - split.upper.mass_gt(a.value)) +
                             (1.0 - p) * (split.lower.mass_geq(a.value) - split.lower.mass_gt(a.value));
      CHECK(rebuilt == doctest::Approx(a.weight).epsilon(1e-10));
    }
    CHECK(split.upper.mean() >= mu.mean() - 1e-12);
    CHECK(split.lower.mean() <= mu.mean() + 1e-12);
    CHECK(split.upper.support_lo() >= u - 1e-12);
    CHECK(split.lower.support_hi() <= u + 1e-12);
  }
  CHECK(tried > 100);
}
