#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <sstream>

#include "resshift/schedule.hpp"
#include "support/schedule_oracle.hpp"

using namespace resshift;

TEST_CASE("schedule endpoints for the reference configuration") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  CHECK(s.eta(1) == doctest::Approx(4e-4).epsilon(1e-14));
  CHECK(s.eta(15) == 0.999);
  CHECK(s.eta(0) == 0.0);
  CHECK(s.alpha(1) == s.eta(1));
}

TEST_CASE("schedule interior matches the high-precision recomputation") {
  // frozen from the long-double oracle below
  const double expected_b0 = 1.3223288766207563;
  const double expected_eta8 = 0.22998100782775946;
  const double expected_alpha8 = 0.057405896470845346;

  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  CHECK(s.b0() == doctest::Approx(expected_b0).epsilon(1e-12));
  CHECK(s.eta(8) == doctest::Approx(expected_eta8).epsilon(1e-12));
  CHECK(s.alpha(8) == doctest::Approx(expected_alpha8).epsilon(1e-12));
  CHECK(testsupport::oracle_beta(8, 15, 0.3L) == doctest::Approx(11.371533548987297));

  const auto oracle = testsupport::oracle_etas(15, 0.3L, 2.0L);
  for (int t = 1; t <= 15; ++t) {
    CHECK(testsupport::rel_err(oracle[t - 1], s.eta(t)) < 1e-10);
  }
}

TEST_CASE("ldm-degeneration configuration hits the 1e-6 eta_1 branch") {
  const Schedule s = build_schedule({1000, 0.8, 40.0, 0.001, 0.999});
  CHECK(s.kappa() * std::sqrt(s.eta(1)) == doctest::Approx(0.04).epsilon(1e-14));
  CHECK(s.eta(1) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(s.eta(1000) == 0.999);
}

TEST_CASE("schedule invariants across parameter sweeps") {
  for (const double kappa : {0.5, 1.0, 2.0, 8.0, 40.0}) {
    for (const double p : {0.3, 1.0, 3.0}) {
      for (const int T : {2, 4, 15, 100}) {
        CAPTURE(kappa);
        CAPTURE(p);
        CAPTURE(T);
        const Schedule s = build_schedule({T, p, kappa, 0.001, 0.999});
        CHECK(s.eta(1) <= 1e-3);
        CHECK(s.eta(T) == 0.999);
        double sum = 0.0;
        for (int t = 1; t <= T; ++t) {
          sum += s.alpha(t);
          if (t > 1) CHECK(s.eta(t) > s.eta(t - 1));
        }
        CHECK(std::fabs(sum - s.eta(T)) < 1e-12);
        if (T >= 2) {
          // sqrt(eta_T) == sqrt(eta_1) * b0^(T-1)
          const double lhs = std::sqrt(s.eta(T));
          const double rhs = std::sqrt(s.eta(1)) * std::pow(s.b0(), T - 1);
          CHECK(std::fabs(lhs - rhs) / lhs < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("larger p gives slower early shifting") {
  const int T = 15;
  const Schedule a = build_schedule({T, 0.3, 2.0, 0.001, 0.999});
  const Schedule b = build_schedule({T, 1.0, 2.0, 0.001, 0.999});
  const Schedule c = build_schedule({T, 3.0, 2.0, 0.001, 0.999});
  for (int t = 2; t <= T - 1; ++t) {
    CHECK(a.eta(t) >= b.eta(t));
    CHECK(b.eta(t) >= c.eta(t));
    CHECK(std::sqrt(a.eta(t)) >= std::sqrt(c.eta(t)));
  }
}

TEST_CASE("degenerate single-step schedule") {
  const Schedule s = build_schedule({1, 0.3, 2.0, 0.001, 0.999});
  CHECK(s.eta(1) == 0.999);
  CHECK(s.alpha(1) == 0.999);
}

TEST_CASE("relative noise intensity and shifting speed") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  const auto rel = s.relative_noise_intensity(1.0);
  CHECK(rel.front() == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(rel.back() == doctest::Approx(2.0 * std::sqrt(0.999)).epsilon(1e-12));
  for (std::size_t i = 1; i < rel.size(); ++i) CHECK(rel[i] > rel[i - 1]);

  // sqrt(4 * 0.25) == 1 at unit signal power
  const Schedule raw = schedule_from_etas({0.25, 0.999}, 2.0);
  CHECK(raw.relative_noise_intensity(1.0).front() == doctest::Approx(1.0));

  const auto speed = s.shifting_speed();
  CHECK(speed.front() == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(speed.back() == doctest::Approx(std::sqrt(0.999)).epsilon(1e-12));
}

TEST_CASE("invalid parameters name the violated bound") {
  CHECK_THROWS_WITH_AS(build_schedule({0, 0.3, 2.0, 0.001, 0.999}),
                       doctest::Contains("T must be >= 1"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_schedule({15, -1.0, 2.0, 0.001, 0.999}),
                       doctest::Contains("p must be > 0"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_schedule({15, 0.3, 0.0, 0.001, 0.999}),
                       doctest::Contains("kappa must be > 0"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_schedule({15, 0.3, 2.0, 0.999, 0.5}),
                       doctest::Contains("eta_1_cap must be < eta_T"), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule({15, 0.3, 2.0, 0.001, 1.5}), std::invalid_argument);
  CHECK_THROWS_AS((void)build_schedule({15, 0.3, 2.0, 0.001, 0.999}).eta(16), std::out_of_range);
}

TEST_CASE("csv export shape and format") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  std::ostringstream os;
  write_schedule_csv(s, 1.0, os);
  const std::string text = os.str();
  CHECK(text.rfind("t,eta,alpha,sqrt_eta,rel_noise\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 16);  // header + 15 rows
  CHECK(text.find(',') != std::string::npos);
  CHECK(text.find("\r") == std::string::npos);
}
