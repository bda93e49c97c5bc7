#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "resshift/rng.hpp"
#include "resshift/schedule.hpp"
#include "resshift/tensor.hpp"

namespace resshift {

// One verification record. `statistic` is the worst observed deviation in
// the units of `tolerance`; pass means statistic <= tolerance plus any
// structural conditions (e.g. monotonicity) the check demands.
struct OracleReport {
  std::string name;
  double statistic = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  long sample_count = 0;
  std::uint64_t seed = 0;
};

// The probability path of the flow view: a noisy interpolation running
// from the LQ image (interpolation coefficient 0) to the HQ image
// (coefficient 1). Step s of the diffusion chain corresponds to
// coefficient 1 - eta_s.
struct FlowPath {
  const Schedule* schedule = nullptr;
  bool lq_at_time_zero = true;

  double coeff_for_step(int s) const;
};

// coeff * x0 + (1 - coeff) * y0 + kappa * sqrt(1 - coeff) * xi
Tensor flow_sample(const Tensor& x0, const Tensor& y0, double coeff, double kappa, Prng* rng);

// Compose the per-step transition t times and compare empirical moments
// against the closed-form marginal: mean within 4 standard errors,
// variance within 2% relative. Scalar anchors x0 = 0.2, y0 = 0.8.
OracleReport verify_marginal_composition(const Schedule& s, int t, long n_chains,
                                         std::uint64_t seed);

struct GridSpec {
  int points = 20001;
  double half_width_sigmas = 6.0;
};

// Numerically normalize q(x_t|x_{t-1},y_0) q(x_{t-1}|x_0,y_0) over an
// x_{t-1} grid and compare moments against the closed-form posterior
// (1e-4 absolute). Also checks that changing y_0 leaves the grid moments
// unchanged (the cancellation behind the two-argument posterior).
OracleReport verify_posterior_bayes(const Schedule& s, int t, const GridSpec& grid = {});

// kappa^2 eta_{t-1} + kappa^2 alpha_t == kappa^2 eta_t for every t.
OracleReport verify_variance_telescoping(const Schedule& s);
OracleReport verify_variance_telescoping(std::span<const double> eta,
                                         std::span<const double> alpha, double kappa);

// Relative noise intensity strictly increasing with endpoints
// kappa sqrt(eta_1) and kappa sqrt(eta_T).
OracleReport verify_snr_curve_monotone(const Schedule& s);

// Flow sample at coeff = 1 - eta_s versus the diffusion marginal at s:
// symbolic mean identity plus MC variance match within 2%.
OracleReport verify_flow_equivalence(const Schedule& s, int step, long n_draws,
                                     std::uint64_t seed);

// suite in {all, marginal, posterior, flow, snr}
std::vector<OracleReport> run_suite(const Schedule& s, const std::string& suite,
                                    std::uint64_t seed);

bool all_pass(const std::vector<OracleReport>& reports);
void write_reports_json(const std::vector<OracleReport>& reports, std::ostream& os);
void print_reports_table(const std::vector<OracleReport>& reports, std::ostream& os);

}  // namespace resshift
