#pragma once

#include <iosfwd>
#include <vector>

namespace resshift {

struct ScheduleParams {
  int T = 15;               // step count
  double p = 0.3;           // growth exponent of the geometric interior
  double kappa = 2.0;       // global noise scale
  double eta_1_cap = 0.001; // eta_1 = min((0.04/kappa)^2, eta_1_cap)
  double eta_T = 0.999;
};

// The shifting sequence {eta_t} and its first differences {alpha_t}.
// Interior points follow sqrt(eta_t) = sqrt(eta_1) * b0^{beta_t} with
//   beta_t = ((t-1)/(T-1))^p * (T-1),
//   b0     = exp(log(eta_T/eta_1) / (2(T-1))),
// and both endpoints pinned. eta(0) == 0 by convention so the t == 1
// posterior is deterministic. Immutable after construction; shared reads
// from any number of threads are fine.
class Schedule {
 public:
  const ScheduleParams& params() const { return params_; }
  int steps() const { return params_.T; }
  double kappa() const { return params_.kappa; }
  double b0() const { return b0_; }

  // t in [0, T]; eta(0) == 0
  double eta(int t) const;
  // t in [1, T]; alpha_1 == eta_1, alpha_t == eta_t - eta_{t-1}
  double alpha(int t) const;

  const std::vector<double>& etas() const { return eta_; }
  const std::vector<double>& alphas() const { return alpha_; }

  // sqrt(kappa^2 * eta_t / signal_power) for t = 1..T
  std::vector<double> relative_noise_intensity(double signal_power) const;
  // sqrt(eta_t) for t = 1..T
  std::vector<double> shifting_speed() const;

 private:
  friend Schedule build_schedule(const ScheduleParams&);
  friend Schedule schedule_from_etas(std::vector<double>, double);
  Schedule() = default;

  ScheduleParams params_;
  double b0_ = 0.0;
  std::vector<double> eta_;
  std::vector<double> alpha_;
};

// Throws std::invalid_argument naming the violated bound.
Schedule build_schedule(const ScheduleParams& params);

// Expert surface: wrap an explicit strictly-increasing sequence in (0, 1).
// Bypasses the geometric construction; p and b0 are not meaningful here.
Schedule schedule_from_etas(std::vector<double> etas, double kappa);

void validate_schedule_params(const ScheduleParams& params);

// Columns t,eta,alpha,sqrt_eta,rel_noise; header row, '.' decimal
// separator, LF line endings.
void write_schedule_csv(const Schedule& s, double signal_power, std::ostream& os);

}  // namespace resshift
