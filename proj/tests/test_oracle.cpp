#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <sstream>

#include "resshift/kernel.hpp"
#include "resshift/oracle.hpp"

using namespace resshift;

TEST_CASE("flow sample limiting coefficients") {
  const Tensor x0({4}, 0.2);
  const Tensor y0({4}, 0.8);
  Prng rng(1);

  const Tensor hq = flow_sample(x0, y0, 1.0, 2.0, &rng);
  CHECK(max_abs_diff(hq, x0) == 0.0);  // sigma = kappa * sqrt(0)

  const Tensor lq_mean = flow_sample(x0, y0, 0.0, 2.0, nullptr);
  CHECK(max_abs_diff(lq_mean, y0) == 0.0);

  CHECK_THROWS_AS(flow_sample(x0, y0, 1.2, 2.0, &rng), std::invalid_argument);
  CHECK_THROWS_AS(flow_sample(x0, y0, -0.1, 2.0, &rng), std::invalid_argument);
}

TEST_CASE("flow path maps diffusion steps into [0,1]") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  const FlowPath path{&s, true};
  for (int t = 1; t <= 15; ++t) {
    const double c = path.coeff_for_step(t);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    CHECK(c == doctest::Approx(1.0 - s.eta(t)));
  }
}

TEST_CASE("flow distribution matches the diffusion marginal at mapped steps") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  for (const int step : {1, 4, 8, 15}) {
    CAPTURE(step);
    const auto rep = verify_flow_equivalence(s, step, 100000, 7);
    CHECK(rep.pass);
  }
}

TEST_CASE("marginal composition oracle on spot-checked steps") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  for (const int t : {1, 8, 15}) {
    CAPTURE(t);
    const auto rep = verify_marginal_composition(s, t, 100000, 11);
    CHECK(rep.pass);
    CHECK(rep.sample_count == 100000);
  }
  CHECK_THROWS_AS(verify_marginal_composition(s, 3, 100, 11), std::invalid_argument);
  // t == T terminal mean follows the closed form 0.2 + 0.999 * 0.6
  const auto g = marginal_params(Tensor::scalar(0.2), Tensor::scalar(0.8), 15, s);
  CHECK(g.mean[0] == doctest::Approx(0.2 + 0.999 * 0.6).epsilon(1e-12));
}

TEST_CASE("grid bayes posterior sweep") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  for (int t = 2; t <= 15; ++t) {
    CAPTURE(t);
    const auto rep = verify_posterior_bayes(s, t);
    CHECK(rep.pass);
    CHECK(rep.statistic < rep.tolerance);
  }
  CHECK_THROWS_AS(verify_posterior_bayes(s, 1), std::invalid_argument);
  CHECK_THROWS_AS(verify_posterior_bayes(s, 3, GridSpec{50, 6.0}), std::invalid_argument);
}

TEST_CASE("grid bayes reproduces the worked posterior numbers") {
  // eta_{t-1} = 0.1, eta_t = 0.2 at t = 2
  const Schedule s = schedule_from_etas({0.1, 0.2}, 2.0);
  const auto rep = verify_posterior_bayes(s, 2);
  CHECK(rep.pass);
  const auto g = posterior_params(Tensor::scalar(0.5), Tensor::scalar(0.2), 2, s);
  CHECK(g.mean[0] == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(g.var == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("variance telescoping holds for built schedules and fails under fault injection") {
  const Schedule ref = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  CHECK(verify_variance_telescoping(ref).pass);

  const Schedule ldm = build_schedule({1000, 0.8, 40.0, 0.001, 0.999});
  CHECK(verify_variance_telescoping(ldm).pass);

  // negative control: perturb one alpha
  std::vector<double> eta(ref.etas());
  std::vector<double> alpha(ref.alphas());
  alpha[7] += 1e-9;
  const auto broken = verify_variance_telescoping(eta, alpha, ref.kappa());
  CHECK_FALSE(broken.pass);
  CHECK(broken.statistic > 1e-12);
}

TEST_CASE("snr curve endpoints and monotonicity") {
  const Schedule small = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  const auto rep_small = verify_snr_curve_monotone(small);
  CHECK(rep_small.pass);
  CHECK(small.relative_noise_intensity(1.0).back() ==
        doctest::Approx(2.0 * std::sqrt(0.999)).epsilon(1e-9));

  const Schedule ldm = build_schedule({1000, 0.8, 40.0, 0.001, 0.999});
  const auto rep_ldm = verify_snr_curve_monotone(ldm);
  CHECK(rep_ldm.pass);
  const auto rel = ldm.relative_noise_intensity(1.0);
  CHECK(std::fabs(rel.front() - 0.04) < 1e-9);
  CHECK(std::fabs(rel.back() - 39.979994997498437) < 1e-6);
}

TEST_CASE("suite runner composes reports and rejects unknown suites") {
  const Schedule s = build_schedule({4, 0.3, 2.0, 0.001, 0.999});
  const auto reports = run_suite(s, "snr", 3);
  CHECK(reports.size() == 1);
  CHECK(all_pass(reports));
  CHECK_THROWS_AS(run_suite(s, "bogus", 3), std::invalid_argument);

  const auto posterior = run_suite(s, "posterior", 3);
  CHECK(posterior.size() == 3);  // t = 2..4
}

TEST_CASE("report serialization is reproducible") {
  const Schedule s = build_schedule({4, 0.3, 2.0, 0.001, 0.999});
  const auto a = run_suite(s, "flow", 17);
  const auto b = run_suite(s, "flow", 17);
  std::ostringstream ja, jb;
  write_reports_json(a, ja);
  write_reports_json(b, jb);
  CHECK(ja.str() == jb.str());
  CHECK(ja.str().find("flow_equivalence") != std::string::npos);

  std::ostringstream table;
  print_reports_table(a, table);
  CHECK(table.str().find("oracle") != std::string::npos);
}
