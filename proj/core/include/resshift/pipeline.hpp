#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "resshift/degrade.hpp"
#include "resshift/objective.hpp"
#include "resshift/predictor.hpp"
#include "resshift/schedule.hpp"
#include "resshift/tensor.hpp"

namespace resshift {

struct RunConfig {
  ScheduleParams schedule;
  ObjectiveSpec objective;
  DegradationSpec degradation;
  int batch_size = 4;
  long iterations = 1000;
  double lr_max = 1e-3;
  double lr_min = 1e-4;
  std::uint64_t seed = 0;
  long checkpoint_every = 0;  // 0 = final checkpoint only
};

void validate_run_config(const RunConfig& cfg);

// Plain "key = value" lines, '#' comments, dotted keys for the nested
// specs (schedule.T, objective.lambda, degradation.kind, ...). Unknown
// keys are errors.
RunConfig parse_run_config(std::istream& is);
RunConfig parse_run_config_file(const std::string& path);
std::uint64_t fnv1a_digest(const std::string& bytes);

struct TrainReport {
  std::vector<double> loss_curve;  // one entry per iteration
  std::vector<double> lr_curve;
  std::vector<long> timestep_counts;  // draws of t = 1..T
  double wall_seconds = 0.0;
  std::string checkpoint_path;
};

// iter,loss,lr rows with a header.
void write_loss_curve_csv(const TrainReport& report, std::ostream& os);

TrainReport train(const RunConfig& cfg, const std::vector<Tensor>& dataset,
                  const std::string& checkpoint_path);

struct SampleOptions {
  bool trace = false;       // keep every x_t
  bool zero_noise = false;  // force all noise draws to zero
};

struct SampleResult {
  Tensor x0;
  // states[i] is x_{T-i}: states.front() == x_T, states.back() == x_0
  std::vector<Tensor> states;
};

using PredictorFn = std::function<Tensor(const Tensor& x_t, const Tensor& y0, int t)>;

// Noise draws are keyed by (seed, chain_id, t) so chains are independent
// of evaluation order.
struct ChainKey {
  std::uint64_t seed = 0;
  std::uint64_t chain_id = 0;
};

SampleResult sample_chain(const PredictorFn& predictor, const Tensor& y, const Schedule& s,
                          const ChainKey& key, const SampleOptions& opts = {});
SampleResult sample(const PredictorParams& params, const Tensor& y, const Schedule& s,
                    const ChainKey& key, const SampleOptions& opts = {});

struct ImageMetrics {
  double mse = 0.0;
  double psnr = 0.0;
};

struct EvalReport {
  std::vector<ImageMetrics> per_image;
  double mean_mse = 0.0;
  double mean_psnr = 0.0;
};

// PSNR = 10 log10(1 / MSE) on [0,1] signals, capped at 99 dB.
double psnr_from_mse(double mse_value);

EvalReport evaluate(const PredictorParams& params, const std::vector<Tensor>& lq,
                    const std::vector<Tensor>& hq, const Schedule& s, std::uint64_t seed);
// Metrics of the inputs themselves (restored vs reference).
EvalReport evaluate_pairs(const std::vector<Tensor>& restored, const std::vector<Tensor>& hq);

void write_eval_csv(const EvalReport& report, std::ostream& os);

}  // namespace resshift
