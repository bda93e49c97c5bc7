#include "resshift/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "resshift/kernel.hpp"

namespace resshift {

namespace {

constexpr double kAnchorX0 = 0.2;
constexpr double kAnchorY0 = 0.8;

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments sample_moments(const Tensor& block) {
  Moments m;
  const double n = static_cast<double>(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) m.mean += block[i];
  m.mean /= n;
  for (std::size_t i = 0; i < block.size(); ++i) {
    const double d = block[i] - m.mean;
    m.var += d * d;
  }
  m.var /= (n - 1.0);
  return m;
}

}  // namespace

double FlowPath::coeff_for_step(int s) const {
  if (schedule == nullptr) throw std::logic_error("FlowPath: no schedule");
  const double c = 1.0 - schedule->eta(s);
  if (c < 0.0 || c > 1.0) throw std::logic_error("FlowPath: coefficient outside [0,1]");
  return c;
}

Tensor flow_sample(const Tensor& x0, const Tensor& y0, double coeff, double kappa, Prng* rng) {
  if (coeff < 0.0 || coeff > 1.0) {
    throw std::invalid_argument("flow_sample: coeff must be in [0,1], got " +
                                std::to_string(coeff));
  }
  require_same_shape(x0, y0, "flow_sample");
  Tensor out = x0;
  const double sd = kappa * std::sqrt(1.0 - coeff);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = coeff * x0[i] + (1.0 - coeff) * y0[i];
    if (rng != nullptr && sd > 0.0) out[i] += sd * rng->normal();
  }
  return out;
}

OracleReport verify_marginal_composition(const Schedule& s, int t, long n_chains,
                                         std::uint64_t seed) {
  if (n_chains < 10000) {
    throw std::invalid_argument("verify_marginal_composition: need >= 1e4 chains");
  }
  OracleReport rep;
  rep.name = "marginal_composition[t=" + std::to_string(t) + "]";
  rep.tolerance = 1.0;
  rep.sample_count = n_chains;
  rep.seed = seed;

  const std::vector<int> shape{static_cast<int>(n_chains)};
  const Tensor x0(shape, kAnchorX0);
  const Tensor y0(shape, kAnchorY0);

  // one block of chains, one transition per step
  Tensor x = x0;
  for (int i = 1; i <= t; ++i) {
    GaussianParams g = forward_transition_params(x, x0, y0, i, s);
    Prng rng = make_prng(seed, Stream::Oracle, static_cast<std::uint64_t>(t),
                         static_cast<std::uint64_t>(i));
    x = sample_isotropic(g, &rng);
  }

  const Moments emp = sample_moments(x);
  const GaussianParams target = marginal_params(Tensor::scalar(kAnchorX0),
                                                Tensor::scalar(kAnchorY0), t, s);
  const double sd = std::sqrt(target.var);
  const double mean_tol = 4.0 * sd / std::sqrt(static_cast<double>(n_chains));
  const double var_tol = 0.02 * target.var;
  const double mean_dev = std::fabs(emp.mean - target.mean[0]);
  const double var_dev = std::fabs(emp.var - target.var);
  rep.statistic = std::max(mean_dev / mean_tol, var_dev / var_tol);
  rep.pass = rep.statistic <= rep.tolerance;
  return rep;
}

namespace {

struct GridMoments {
  Moments m;
  double tail_mass = 0.0;
};

// trapezoid-normalized moments of the product density over the x_{t-1} grid
GridMoments grid_bayes_moments(const Schedule& s, int t, double x_t, double x0, double y0,
                               double center, double half_width, int points) {
  const double e0 = y0 - x0;
  const double k2 = s.kappa() * s.kappa();
  const double var_fwd = k2 * s.alpha(t);
  const double var_mrg = k2 * s.eta(t - 1);
  const double h = 2.0 * half_width / (points - 1);

  double z = 0.0, m1 = 0.0;
  std::vector<double> density(points);
  for (int i = 0; i < points; ++i) {
    const double u = center - half_width + i * h;
    const double d1 = x_t - u - s.alpha(t) * e0;
    const double d2 = u - x0 - s.eta(t - 1) * e0;
    const double f = std::exp(-0.5 * (d1 * d1 / var_fwd + d2 * d2 / var_mrg));
    density[i] = f;
    const double w = (i == 0 || i == points - 1) ? 0.5 : 1.0;
    z += w * f;
    m1 += w * f * u;
  }
  GridMoments out;
  out.m.mean = m1 / z;
  double m2 = 0.0;
  for (int i = 0; i < points; ++i) {
    const double u = center - half_width + i * h;
    const double w = (i == 0 || i == points - 1) ? 0.5 : 1.0;
    const double d = u - out.m.mean;
    m2 += w * density[i] * d * d;
  }
  out.m.var = m2 / z;
  out.tail_mass = (density.front() + density.back()) / (z * 2.0);
  return out;
}

}  // namespace

OracleReport verify_posterior_bayes(const Schedule& s, int t, const GridSpec& grid) {
  if (t < 2) throw std::invalid_argument("verify_posterior_bayes: t must be >= 2");
  if (grid.points < 101) throw std::invalid_argument("verify_posterior_bayes: grid too coarse");

  OracleReport rep;
  rep.name = "posterior_bayes[t=" + std::to_string(t) + "]";
  rep.tolerance = 1e-4;
  rep.sample_count = grid.points;

  const double x0 = kAnchorX0, y0 = kAnchorY0;
  const GaussianParams marg = marginal_params(Tensor::scalar(x0), Tensor::scalar(y0), t, s);
  const double x_t = marg.mean[0] + 0.37;  // off-mean probe state

  const GaussianParams closed = posterior_params(Tensor::scalar(x_t), Tensor::scalar(x0), t, s);
  const double sigma_c =
      s.kappa() * std::sqrt(std::min(s.alpha(t), s.eta(t - 1)));  // bounds the posterior sd
  const double half_width = grid.half_width_sigmas * sigma_c;

  const GridMoments fine =
      grid_bayes_moments(s, t, x_t, x0, y0, closed.mean[0], half_width, grid.points);
  const GridMoments coarse =
      grid_bayes_moments(s, t, x_t, x0, y0, closed.mean[0], half_width, (grid.points + 1) / 2);
  const double quad_err = std::max(std::fabs(fine.m.mean - coarse.m.mean),
                                   std::fabs(fine.m.var - coarse.m.var));
  if (quad_err > 0.1 * rep.tolerance) {
    throw std::runtime_error("verify_posterior_bayes: grid too coarse, estimated quadrature "
                             "error " + std::to_string(quad_err));
  }

  // same x_t and x0 but a different y0: the grid moments must not move
  const GridMoments other =
      grid_bayes_moments(s, t, x_t, x0, 0.35, closed.mean[0], half_width, grid.points);

  const double mean_dev = std::fabs(fine.m.mean - closed.mean[0]);
  const double var_dev = std::fabs(fine.m.var - closed.var);
  const double cancel_dev = std::max(std::fabs(other.m.mean - fine.m.mean),
                                     std::fabs(other.m.var - fine.m.var));
  rep.statistic = std::max({mean_dev, var_dev, cancel_dev});
  rep.pass = rep.statistic <= rep.tolerance;
  return rep;
}

OracleReport verify_variance_telescoping(std::span<const double> eta,
                                         std::span<const double> alpha, double kappa) {
  if (eta.size() != alpha.size() || eta.empty()) {
    throw std::invalid_argument("verify_variance_telescoping: eta/alpha size mismatch");
  }
  OracleReport rep;
  rep.name = "variance_telescoping[T=" + std::to_string(eta.size()) + "]";
  rep.tolerance = 1e-12;
  rep.sample_count = static_cast<long>(eta.size());
  const double k2 = kappa * kappa;
  double worst = 0.0;
  for (std::size_t t = 0; t < eta.size(); ++t) {
    const double eta_prev = t == 0 ? 0.0 : eta[t - 1];
    worst = std::max(worst, std::fabs(k2 * eta_prev + k2 * alpha[t] - k2 * eta[t]));
  }
  rep.statistic = worst;
  rep.pass = worst <= rep.tolerance;
  return rep;
}

OracleReport verify_variance_telescoping(const Schedule& s) {
  return verify_variance_telescoping(std::span<const double>(s.etas()),
                                     std::span<const double>(s.alphas()), s.kappa());
}

OracleReport verify_snr_curve_monotone(const Schedule& s) {
  OracleReport rep;
  rep.name = "snr_curve_monotone[T=" + std::to_string(s.steps()) + "]";
  rep.tolerance = 1e-6;
  rep.sample_count = s.steps();
  const auto rel = s.relative_noise_intensity(1.0);
  bool increasing = true;
  for (std::size_t i = 1; i < rel.size(); ++i) {
    if (!(rel[i] > rel[i - 1])) increasing = false;
  }
  const double lo = s.kappa() * std::sqrt(s.eta(1));
  const double hi = s.kappa() * std::sqrt(s.eta(s.steps()));
  rep.statistic = std::max(std::fabs(rel.front() - lo), std::fabs(rel.back() - hi));
  rep.pass = increasing && rep.statistic <= rep.tolerance;
  return rep;
}

OracleReport verify_flow_equivalence(const Schedule& s, int step, long n_draws,
                                     std::uint64_t seed) {
  if (step < 1 || step > s.steps()) {
    throw std::out_of_range("verify_flow_equivalence: step outside [1,T]");
  }
  if (n_draws < 10000) throw std::invalid_argument("verify_flow_equivalence: need >= 1e4 draws");

  OracleReport rep;
  rep.name = "flow_equivalence[s=" + std::to_string(step) + "]";
  rep.tolerance = 1.0;
  rep.sample_count = n_draws;
  rep.seed = seed;

  const double coeff = 1.0 - s.eta(step);
  // symbolic mean identity between the two parameterizations
  const double flow_mean = coeff * kAnchorX0 + (1.0 - coeff) * kAnchorY0;
  const double marg_mean = kAnchorX0 + s.eta(step) * (kAnchorY0 - kAnchorX0);
  const double mean_gap = std::fabs(flow_mean - marg_mean);
  if (mean_gap > 1e-14) {
    rep.statistic = mean_gap / 1e-14;
    rep.pass = false;
    return rep;
  }

  const std::vector<int> shape{static_cast<int>(n_draws)};
  const Tensor x0(shape, kAnchorX0);
  const Tensor y0(shape, kAnchorY0);
  Prng rng_flow = make_prng(seed, Stream::Oracle, 0x0F10, static_cast<std::uint64_t>(step));
  const Tensor flow = flow_sample(x0, y0, coeff, s.kappa(), &rng_flow);
  Prng rng_marg = make_prng(seed, Stream::Oracle, 0x0F11, static_cast<std::uint64_t>(step));
  const Tensor marg = sample_marginal(x0, y0, step, s, &rng_marg);

  const double target_var = s.kappa() * s.kappa() * s.eta(step);
  const Moments mf = sample_moments(flow);
  const Moments mm = sample_moments(marg);
  const double var_tol = 0.02 * target_var;
  const double se = std::sqrt(target_var / static_cast<double>(n_draws));
  rep.statistic = std::max({std::fabs(mf.var - target_var) / var_tol,
                            std::fabs(mm.var - target_var) / var_tol,
                            std::fabs(mf.mean - mm.mean) / (4.0 * se * std::sqrt(2.0))});
  rep.pass = rep.statistic <= rep.tolerance;
  return rep;
}

std::vector<OracleReport> run_suite(const Schedule& s, const std::string& suite,
                                    std::uint64_t seed) {
  const bool all = suite == "all";
  if (!all && suite != "marginal" && suite != "posterior" && suite != "flow" && suite != "snr") {
    throw std::invalid_argument("run_suite: unknown suite '" + suite + "'");
  }
  std::vector<OracleReport> reports;
  const int T = s.steps();
  if (all || suite == "marginal") {
    for (int t = 1; t <= T; ++t) {
      reports.push_back(verify_marginal_composition(s, t, 100000, seed));
    }
  }
  if (all || suite == "posterior") {
    for (int t = 2; t <= T; ++t) reports.push_back(verify_posterior_bayes(s, t));
  }
  if (all || suite == "flow") {
    std::vector<int> steps{1, std::max(1, T / 4), std::max(1, T / 2), T};
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    for (int st : steps) reports.push_back(verify_flow_equivalence(s, st, 100000, seed));
  }
  if (all || suite == "snr") {
    reports.push_back(verify_snr_curve_monotone(s));
  }
  if (all) {
    reports.push_back(verify_variance_telescoping(s));
  }
  return reports;
}

bool all_pass(const std::vector<OracleReport>& reports) {
  return std::all_of(reports.begin(), reports.end(),
                     [](const OracleReport& r) { return r.pass; });
}

void write_reports_json(const std::vector<OracleReport>& reports, std::ostream& os) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    arr.push_back({{"name", r.name},
                   {"statistic", r.statistic},
                   {"tolerance", r.tolerance},
                   {"pass", r.pass},
                   {"sample_count", r.sample_count},
                   {"seed", r.seed}});
  }
  os << arr.dump(2) << "\n";
}

void print_reports_table(const std::vector<OracleReport>& reports, std::ostream& os) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-32s %12s %12s %6s %9s %6s\n", "oracle", "statistic",
                "tolerance", "pass", "samples", "seed");
  os << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-32s %12.4e %12.4e %6s %9ld %6llu\n", r.name.c_str(),
                  r.statistic, r.tolerance, r.pass ? "ok" : "FAIL", r.sample_count,
                  static_cast<unsigned long long>(r.seed));
    os << line;
  }
}

}  // namespace resshift
