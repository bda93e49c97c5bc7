#include "resshift/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace resshift {

namespace {

void require_step(int t, const Schedule& s, const char* where) {
  if (t < 1 || t > s.steps()) {
    throw std::out_of_range(std::string(where) + ": t=" + std::to_string(t) + " outside [1," +
                            std::to_string(s.steps()) + "]");
  }
}

}  // namespace

GaussianParams forward_transition_params(const Tensor& x_prev, const Tensor& x0,
                                         const Tensor& y0, int t, const Schedule& s) {
  require_step(t, s, "forward_transition_params");
  require_same_shape(x_prev, x0, "forward_transition_params");
  require_same_shape(x0, y0, "forward_transition_params");
  const double a = s.alpha(t);
  GaussianParams g;
  g.mean = x_prev;
  for (std::size_t i = 0; i < g.mean.size(); ++i) g.mean[i] += a * (y0[i] - x0[i]);
  g.var = s.kappa() * s.kappa() * a;
  return g;
}

GaussianParams marginal_params(const Tensor& x0, const Tensor& y0, int t, const Schedule& s) {
  require_step(t, s, "marginal_params");
  require_same_shape(x0, y0, "marginal_params");
  const double e = s.eta(t);
  GaussianParams g;
  g.mean = x0;
  for (std::size_t i = 0; i < g.mean.size(); ++i) g.mean[i] += e * (y0[i] - x0[i]);
  g.var = s.kappa() * s.kappa() * e;
  return g;
}

Tensor sample_isotropic(const GaussianParams& g, Prng* rng) {
  Tensor out = g.mean;
  if (rng != nullptr && g.var > 0.0) {
    const double sd = std::sqrt(g.var);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += sd * rng->normal();
  }
  return out;
}

Tensor sample_marginal(const Tensor& x0, const Tensor& y0, int t, const Schedule& s, Prng* rng) {
  return sample_isotropic(marginal_params(x0, y0, t, s), rng);
}

GaussianParams posterior_params(const Tensor& x_t, const Tensor& x0, int t, const Schedule& s) {
  require_step(t, s, "posterior_params");
  require_same_shape(x_t, x0, "posterior_params");
  const double eta_prev = s.eta(t - 1);
  const double eta_t = s.eta(t);
  const double a = s.alpha(t);
  const double w_xt = eta_prev / eta_t;
  const double w_x0 = a / eta_t;
  GaussianParams g;
  g.mean = x_t;
  for (std::size_t i = 0; i < g.mean.size(); ++i) g.mean[i] = w_xt * x_t[i] + w_x0 * x0[i];
  g.var = s.kappa() * s.kappa() * w_xt * a;
  return g;
}

Tensor reverse_step(const Tensor& x_t, const Tensor& x0_hat, int t, const Schedule& s, Prng* rng) {
  GaussianParams g = posterior_params(x_t, x0_hat, t, s);
  return sample_isotropic(g, t == 1 ? nullptr : rng);
}

ElboWeight elbo_weight(int t, const Schedule& s) {
  require_step(t, s, "elbo_weight");
  if (t == 1) return ElboWeight{1.0, true};
  const double k2 = s.kappa() * s.kappa();
  return ElboWeight{s.alpha(t) / (2.0 * k2 * s.eta(t) * s.eta(t - 1)), false};
}

}  // namespace resshift
