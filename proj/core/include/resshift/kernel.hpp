#pragma once

#include "resshift/rng.hpp"
#include "resshift/schedule.hpp"
#include "resshift/tensor.hpp"

namespace resshift {

// Isotropic Gaussian over a tensor: per-element mean plus one shared
// scalar variance. Every kernel in the chain has this form.
struct GaussianParams {
  Tensor mean;
  double var = 0.0;
};

struct ElboWeight {
  double value = 1.0;
  // true at t == 1, where the weight formula divides by eta_0 == 0 and the
  // value is defined as 1 instead
  bool sentinel = false;
};

// q(x_t | x_{t-1}, y_0): mean x_{t-1} + alpha_t (y_0 - x_0), var kappa^2 alpha_t
GaussianParams forward_transition_params(const Tensor& x_prev, const Tensor& x0,
                                         const Tensor& y0, int t, const Schedule& s);

// q(x_t | x_0, y_0): mean x_0 + eta_t (y_0 - x_0), var kappa^2 eta_t
GaussianParams marginal_params(const Tensor& x0, const Tensor& y0, int t, const Schedule& s);

// Draw from the marginal; rng == nullptr forces the noise term to zero.
Tensor sample_marginal(const Tensor& x0, const Tensor& y0, int t, const Schedule& s, Prng* rng);

// q(x_{t-1} | x_t, x_0): mean (eta_{t-1}/eta_t) x_t + (alpha_t/eta_t) x_0,
// var kappa^2 (eta_{t-1}/eta_t) alpha_t. y_0 cancels out of the closed form.
GaussianParams posterior_params(const Tensor& x_t, const Tensor& x0, int t, const Schedule& s);

// One reverse sampling step with x0_hat standing in for x_0 in the
// posterior mean. Noise is forced to zero at t == 1 (and when rng == nullptr).
Tensor reverse_step(const Tensor& x_t, const Tensor& x0_hat, int t, const Schedule& s, Prng* rng);

// w_t = alpha_t / (2 kappa^2 eta_t eta_{t-1}) for t >= 2; sentinel 1 at t == 1.
ElboWeight elbo_weight(int t, const Schedule& s);

// mean + sqrt(var) * xi with xi element-wise standard normal (zero when rng
// is null). Shared by marginal sampling, reverse steps and the oracles.
Tensor sample_isotropic(const GaussianParams& g, Prng* rng);

}  // namespace resshift
