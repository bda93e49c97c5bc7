#pragma once

// Independent high-precision recomputation of the shifting sequence, kept
// apart from the library implementation on purpose: the tests compare the
// double-precision build against this long-double route.

#include <algorithm>
#include <cmath>
#include <vector>

namespace testsupport {

inline long double oracle_eta_1(long double kappa, long double cap = 0.001L) {
  const long double r = 0.04L / kappa;
  return std::min(r * r, cap);
}

inline long double oracle_b0(int T, long double kappa, long double cap = 0.001L,
                             long double eta_T = 0.999L) {
  return expl(logl(eta_T / oracle_eta_1(kappa, cap)) / (2.0L * (T - 1)));
}

inline long double oracle_beta(int t, int T, long double p) {
  return powl(static_cast<long double>(t - 1) / (T - 1), p) * (T - 1);
}

inline std::vector<long double> oracle_etas(int T, long double p, long double kappa,
                                            long double cap = 0.001L,
                                            long double eta_T = 0.999L) {
  std::vector<long double> eta(T);
  if (T == 1) {
    eta[0] = eta_T;
    return eta;
  }
  const long double eta_1 = oracle_eta_1(kappa, cap);
  const long double b0 = oracle_b0(T, kappa, cap, eta_T);
  eta[0] = eta_1;
  eta[T - 1] = eta_T;
  for (int t = 2; t <= T - 1; ++t) {
    const long double se = sqrtl(eta_1) * powl(b0, oracle_beta(t, T, p));
    eta[t - 1] = se * se;
  }
  return eta;
}

inline double rel_err(long double reference, double value) {
  if (reference == 0.0L) return std::fabs(static_cast<double>(value));
  return static_cast<double>(fabsl((static_cast<long double>(value) - reference) / reference));
}

}  // namespace testsupport
