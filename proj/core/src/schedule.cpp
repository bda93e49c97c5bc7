#include "resshift/schedule.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace resshift {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("ScheduleParams: " + what);
}

}  // namespace

void validate_schedule_params(const ScheduleParams& p) {
  if (p.T < 1) fail("T must be >= 1, got " + std::to_string(p.T));
  if (!(p.p > 0.0)) fail("p must be > 0, got " + std::to_string(p.p));
  if (!(p.kappa > 0.0)) fail("kappa must be > 0, got " + std::to_string(p.kappa));
  if (!(p.eta_1_cap > 0.0)) fail("eta_1_cap must be > 0, got " + std::to_string(p.eta_1_cap));
  if (!(p.eta_1_cap < p.eta_T)) {
    fail("eta_1_cap must be < eta_T, got " + std::to_string(p.eta_1_cap) +
         " vs " + std::to_string(p.eta_T));
  }
  if (!(p.eta_T < 1.0)) fail("eta_T must be < 1, got " + std::to_string(p.eta_T));
}

Schedule build_schedule(const ScheduleParams& params) {
  validate_schedule_params(params);

  Schedule s;
  s.params_ = params;
  const int T = params.T;
  s.eta_.resize(T);
  s.alpha_.resize(T);

  if (T == 1) {
    // degenerate single full shift
    s.eta_[0] = params.eta_T;
    s.alpha_[0] = params.eta_T;
    s.b0_ = 1.0;
    return s;
  }

  const double ratio = 0.04 / params.kappa;
  const double eta_1 = std::min(ratio * ratio, params.eta_1_cap);
  const double eta_T = params.eta_T;
  const double b0 = std::exp(std::log(eta_T / eta_1) / (2.0 * (T - 1)));
  s.b0_ = b0;

  s.eta_[0] = eta_1;
  s.eta_[T - 1] = eta_T;
  const double sqrt_eta_1 = std::sqrt(eta_1);
  for (int t = 2; t <= T - 1; ++t) {
    const double beta_t = std::pow(static_cast<double>(t - 1) / (T - 1), params.p) * (T - 1);
    const double sqrt_eta_t = sqrt_eta_1 * std::pow(b0, beta_t);
    s.eta_[t - 1] = sqrt_eta_t * sqrt_eta_t;
  }

  s.alpha_[0] = s.eta_[0];
  for (int t = 2; t <= T; ++t) s.alpha_[t - 1] = s.eta_[t - 1] - s.eta_[t - 2];
  return s;
}

Schedule schedule_from_etas(std::vector<double> etas, double kappa) {
  if (etas.empty()) throw std::invalid_argument("schedule_from_etas: empty sequence");
  if (!(kappa > 0.0)) throw std::invalid_argument("schedule_from_etas: kappa must be > 0");
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0.0) || !(etas[i] < 1.0)) {
      throw std::invalid_argument("schedule_from_etas: eta values must lie in (0,1)");
    }
    if (i > 0 && !(etas[i] > etas[i - 1])) {
      throw std::invalid_argument("schedule_from_etas: eta must be strictly increasing");
    }
  }
  Schedule s;
  s.params_.T = static_cast<int>(etas.size());
  s.params_.kappa = kappa;
  s.params_.eta_T = etas.back();
  s.b0_ = 0.0;
  s.alpha_.resize(etas.size());
  s.alpha_[0] = etas[0];
  for (std::size_t i = 1; i < etas.size(); ++i) s.alpha_[i] = etas[i] - etas[i - 1];
  s.eta_ = std::move(etas);
  return s;
}

double Schedule::eta(int t) const {
  if (t == 0) return 0.0;
  if (t < 0 || t > params_.T) {
    throw std::out_of_range("Schedule::eta: t=" + std::to_string(t) + " outside [0," +
                            std::to_string(params_.T) + "]");
  }
  return eta_[t - 1];
}

double Schedule::alpha(int t) const {
  if (t < 1 || t > params_.T) {
    throw std::out_of_range("Schedule::alpha: t=" + std::to_string(t) + " outside [1," +
                            std::to_string(params_.T) + "]");
  }
  return alpha_[t - 1];
}

std::vector<double> Schedule::relative_noise_intensity(double signal_power) const {
  if (!(signal_power > 0.0)) {
    throw std::invalid_argument("relative_noise_intensity: signal_power must be > 0");
  }
  std::vector<double> out(eta_.size());
  const double k2 = params_.kappa * params_.kappa;
  for (std::size_t i = 0; i < eta_.size(); ++i) {
    out[i] = std::sqrt(k2 * eta_[i] / signal_power);
  }
  return out;
}

std::vector<double> Schedule::shifting_speed() const {
  std::vector<double> out(eta_.size());
  for (std::size_t i = 0; i < eta_.size(); ++i) out[i] = std::sqrt(eta_[i]);
  return out;
}

void write_schedule_csv(const Schedule& s, double signal_power, std::ostream& os) {
  const auto rel = s.relative_noise_intensity(signal_power);
  os << "t,eta,alpha,sqrt_eta,rel_noise\n";
  char line[256];
  for (int t = 1; t <= s.steps(); ++t) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g\n", t, s.eta(t), s.alpha(t),
                  std::sqrt(s.eta(t)), rel[t - 1]);
    os << line;
  }
}

}  // namespace resshift
