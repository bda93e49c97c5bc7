#pragma once

// Central finite differences against the analytic reverse-mode gradient.

#include <algorithm>
#include <cmath>
#include <vector>

#include "resshift/predictor.hpp"
#include "resshift/rng.hpp"

namespace testsupport {

struct FdCheckResult {
  int checked = 0;
  double max_rel_err = 0.0;
};

inline FdCheckResult finite_difference_check(const resshift::PredictorParams& params,
                                             const std::vector<resshift::TrainSample>& batch,
                                             const resshift::ObjectiveSpec& objective,
                                             const resshift::Schedule& s, int n_coords,
                                             std::uint64_t seed, double h = 1e-5) {
  using namespace resshift;
  const auto [loss, grad] = loss_and_gradient(params, batch, objective, s);
  (void)loss;

  Prng pick(seed, 0xFD);
  FdCheckResult result;
  PredictorParams work = params;
  for (int i = 0; i < n_coords; ++i) {
    const std::size_t idx = pick.uniform_index(params.theta.size());
    const double saved = work.theta[idx];
    work.theta[idx] = saved + h;
    const double lp = loss_and_gradient(work, batch, objective, s).first;
    work.theta[idx] = saved - h;
    const double lm = loss_and_gradient(work, batch, objective, s).first;
    work.theta[idx] = saved;
    const double numeric = (lp - lm) / (2.0 * h);
    const double analytic = grad.d_theta[idx];
    const double denom = std::max(std::fabs(numeric), std::fabs(analytic));
    if (denom < 1e-9) continue;  // both effectively zero
    result.max_rel_err = std::max(result.max_rel_err, std::fabs(numeric - analytic) / denom);
    result.checked += 1;
  }
  return result;
}

}  // namespace testsupport
