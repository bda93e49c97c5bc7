#include "resshift/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "resshift/kernel.hpp"

namespace resshift {

void validate_run_config(const RunConfig& cfg) {
  validate_schedule_params(cfg.schedule);
  validate_degradation_spec(cfg.degradation);
  if (cfg.batch_size < 1) throw std::invalid_argument("RunConfig: batch_size must be >= 1");
  if (cfg.iterations < 1) throw std::invalid_argument("RunConfig: iterations must be >= 1");
  if (!(cfg.lr_min >= 0.0) || !(cfg.lr_max >= cfg.lr_min)) {
    throw std::invalid_argument("RunConfig: learning rates must satisfy lr_max >= lr_min >= 0");
  }
  if (cfg.checkpoint_every < 0) {
    throw std::invalid_argument("RunConfig: checkpoint_every must be >= 0");
  }
  if (cfg.objective.lambda < 0.0) throw std::invalid_argument("RunConfig: lambda must be >= 0");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("config: bad value '" + value + "' for key '" + key + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) bad_value(key, v);
    return d;
  } catch (const std::invalid_argument&) {
    bad_value(key, v);
  } catch (const std::out_of_range&) {
    bad_value(key, v);
  }
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long l = std::stol(v, &pos);
    if (pos != v.size()) bad_value(key, v);
    return l;
  } catch (const std::invalid_argument&) {
    bad_value(key, v);
  } catch (const std::out_of_range&) {
    bad_value(key, v);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) bad_value(key, v);
    return static_cast<std::uint64_t>(u);
  } catch (const std::invalid_argument&) {
    bad_value(key, v);
  } catch (const std::out_of_range&) {
    bad_value(key, v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string p = trim(item);
    if (!p.empty()) parts.push_back(p);
  }
  return parts;
}

PerceptualSpec& ensure_perceptual(RunConfig& cfg) {
  if (!cfg.objective.perceptual.has_value()) cfg.objective.perceptual.emplace();
  return *cfg.objective.perceptual;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "schedule.T") cfg.schedule.T = static_cast<int>(parse_long(key, value));
  else if (key == "schedule.p") cfg.schedule.p = parse_double(key, value);
  else if (key == "schedule.kappa") cfg.schedule.kappa = parse_double(key, value);
  else if (key == "schedule.eta_1_cap") cfg.schedule.eta_1_cap = parse_double(key, value);
  else if (key == "schedule.eta_T") cfg.schedule.eta_T = parse_double(key, value);
  else if (key == "objective.data_term") {
    if (value == "l2") cfg.objective.data_term = DataTerm::L2;
    else if (value == "l1") cfg.objective.data_term = DataTerm::L1;
    else bad_value(key, value);
  } else if (key == "objective.use_elbo_weights") {
    cfg.objective.use_elbo_weights = parse_bool(key, value);
  } else if (key == "objective.lambda") {
    cfg.objective.lambda = parse_double(key, value);
  } else if (key == "objective.perceptual.feature_channels") {
    ensure_perceptual(cfg).feature_channels = static_cast<int>(parse_long(key, value));
  } else if (key == "objective.perceptual.seed") {
    ensure_perceptual(cfg).seed = parse_u64(key, value);
  } else if (key == "objective.perceptual.layer_weights") {
    auto& ps = ensure_perceptual(cfg);
    ps.layer_weights.clear();
    for (const auto& item : split_list(value)) ps.layer_weights.push_back(parse_double(key, item));
  } else if (key == "degradation.kind") {
    if (value == "identity") cfg.degradation.kind = DegradationKind::Identity;
    else if (value == "superres") cfg.degradation.kind = DegradationKind::SuperRes;
    else if (value == "inpaint") cfg.degradation.kind = DegradationKind::Inpaint;
    else bad_value(key, value);
  } else if (key == "degradation.scale") {
    cfg.degradation.scale = static_cast<int>(parse_long(key, value));
  } else if (key == "degradation.resample") {
    cfg.degradation.resample.clear();
    for (const auto& item : split_list(value)) {
      if (item == "nearest") cfg.degradation.resample.push_back(ResampleMode::Nearest);
      else if (item == "bilinear") cfg.degradation.resample.push_back(ResampleMode::Bilinear);
      else if (item == "area") cfg.degradation.resample.push_back(ResampleMode::Area);
      else bad_value(key, value);
    }
  } else if (key == "degradation.blur.iso_prob") {
    cfg.degradation.blur.iso_prob = parse_double(key, value);
  } else if (key == "degradation.blur.window") {
    cfg.degradation.blur.window = static_cast<int>(parse_long(key, value));
  } else if (key == "degradation.blur.width_min") {
    cfg.degradation.blur.width_min = parse_double(key, value);
  } else if (key == "degradation.blur.width_max") {
    cfg.degradation.blur.width_max = parse_double(key, value);
  } else if (key == "degradation.noise.gaussian_prob") {
    cfg.degradation.noise.gaussian_prob = parse_double(key, value);
  } else if (key == "degradation.noise.gaussian_level_min") {
    cfg.degradation.noise.gaussian_level_min = parse_double(key, value);
  } else if (key == "degradation.noise.gaussian_level_max") {
    cfg.degradation.noise.gaussian_level_max = parse_double(key, value);
  } else if (key == "degradation.noise.poisson_scale_min") {
    cfg.degradation.noise.poisson_scale_min = parse_double(key, value);
  } else if (key == "degradation.noise.poisson_scale_max") {
    cfg.degradation.noise.poisson_scale_max = parse_double(key, value);
  } else if (key == "degradation.mask.type") {
    if (value == "box") cfg.degradation.mask.type = MaskType::Box;
    else if (value == "irregular") cfg.degradation.mask.type = MaskType::Irregular;
    else if (value == "half") cfg.degradation.mask.type = MaskType::Half;
    else if (value == "expand") cfg.degradation.mask.type = MaskType::Expand;
    else bad_value(key, value);
  } else if (key == "degradation.mask.box_area_fraction") {
    cfg.degradation.mask.box_area_fraction = parse_double(key, value);
  } else if (key == "degradation.mask.stroke_count_min") {
    cfg.degradation.mask.stroke_count_min = static_cast<int>(parse_long(key, value));
  } else if (key == "degradation.mask.stroke_count_max") {
    cfg.degradation.mask.stroke_count_max = static_cast<int>(parse_long(key, value));
  } else if (key == "degradation.mask.stroke_width_min") {
    cfg.degradation.mask.stroke_width_min = parse_double(key, value);
  } else if (key == "degradation.mask.stroke_width_max") {
    cfg.degradation.mask.stroke_width_max = parse_double(key, value);
  } else if (key == "degradation.mask.half_side") {
    if (value == "random") cfg.degradation.mask.half_side = HalfSide::Random;
    else if (value == "left") cfg.degradation.mask.half_side = HalfSide::Left;
    else if (value == "right") cfg.degradation.mask.half_side = HalfSide::Right;
    else if (value == "top") cfg.degradation.mask.half_side = HalfSide::Top;
    else if (value == "bottom") cfg.degradation.mask.half_side = HalfSide::Bottom;
    else bad_value(key, value);
  } else if (key == "degradation.mask.expand_border_fraction") {
    cfg.degradation.mask.expand_border_fraction = parse_double(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = static_cast<int>(parse_long(key, value));
  } else if (key == "iterations") {
    cfg.iterations = parse_long(key, value);
  } else if (key == "lr_max") {
    cfg.lr_max = parse_double(key, value);
  } else if (key == "lr_min") {
    cfg.lr_min = parse_double(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_u64(key, value);
  } else if (key == "checkpoint_every") {
    cfg.checkpoint_every = parse_long(key, value);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

}  // namespace

RunConfig parse_run_config(std::istream& is) {
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not 'key = value': " + line);
    }
    apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (cfg.objective.lambda > 0.0 && !cfg.objective.perceptual.has_value()) {
    cfg.objective.perceptual.emplace();
  }
  validate_run_config(cfg);
  return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  return parse_run_config(is);
}

std::uint64_t fnv1a_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_loss_curve_csv(const TrainReport& report, std::ostream& os) {
  os << "iter,loss,lr\n";
  char line[128];
  for (std::size_t i = 0; i < report.loss_curve.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", i, report.loss_curve[i],
                  report.lr_curve[i]);
    os << line;
  }
}

TrainReport train(const RunConfig& cfg, const std::vector<Tensor>& dataset,
                  const std::string& checkpoint_path) {
  validate_run_config(cfg);
  if (dataset.empty()) throw std::invalid_argument("train: dataset must not be empty");
  for (const auto& x : dataset) {
    if (x.ndim() != 3) throw std::invalid_argument("train: dataset items must be (c,h,w)");
    require_same_shape(dataset.front(), x, "train");
  }
  const auto t_start = std::chrono::steady_clock::now();

  const int channels = dataset.front().channels();
  RunConfig run = cfg;
  if (run.objective.lambda > 0.0) {
    if (!run.objective.perceptual.has_value()) run.objective.perceptual.emplace();
    run.objective.perceptual->data_channels = channels;
  }

  const Schedule s = build_schedule(run.schedule);
  const int T = s.steps();
  const PredictorLayout layout = PredictorLayout::reference(channels);
  Prng init_rng = make_prng(run.seed, Stream::ParamInit, 0);
  PredictorParams params = PredictorParams::initialized(layout, init_rng);
  AdamState opt = AdamState::for_params(params);

  TrainReport report;
  report.loss_curve.reserve(run.iterations);
  report.lr_curve.reserve(run.iterations);
  report.timestep_counts.assign(T, 0);
  report.checkpoint_path = checkpoint_path;

  std::vector<TrainSample> batch(run.batch_size);
  for (long iter = 0; iter < run.iterations; ++iter) {
    for (int k = 0; k < run.batch_size; ++k) {
      const std::uint64_t chain = static_cast<std::uint64_t>(iter) * run.batch_size + k;
      Prng pick = make_prng(run.seed, Stream::BatchPick, chain);
      const Tensor& x0 = dataset[pick.uniform_index(dataset.size())];
      Prng dg = make_prng(run.seed, Stream::Degrade, chain);
      Tensor y0 = degrade(x0, run.degradation, dg);
      Prng td = make_prng(run.seed, Stream::TimestepDraw, chain);
      const int t = 1 + static_cast<int>(td.uniform_index(T));
      Prng mg = make_prng(run.seed, Stream::Marginal, chain, static_cast<std::uint64_t>(t));
      Tensor x_t = sample_marginal(x0, y0, t, s, &mg);
      report.timestep_counts[t - 1] += 1;
      batch[k] = TrainSample{std::move(x_t), std::move(y0), t, x0};
    }

    double loss = 0.0;
    try {
      auto [loss_v, grad] = loss_and_gradient(params, batch, run.objective, s);
      loss = loss_v;
      const double lr = cosine_lr(iter, run.iterations, run.lr_max, run.lr_min);
      adam_step(params, grad, opt, lr);
      report.loss_curve.push_back(loss);
      report.lr_curve.push_back(lr);
    } catch (const NonFiniteLossError& e) {
      std::ostringstream os;
      os << "train: aborted at iteration " << iter << ": " << e.what()
         << " (t=" << batch[e.batch_index].t
         << ", x_t range [" << batch[e.batch_index].x_t.min_value() << ", "
         << batch[e.batch_index].x_t.max_value() << "], theta finite="
         << (std::all_of(params.theta.begin(), params.theta.end(),
                         [](double v) { return std::isfinite(v); })
                 ? "yes"
                 : "no")
         << ")";
      throw std::runtime_error(os.str());
    }

    if (run.checkpoint_every > 0 && (iter + 1) % run.checkpoint_every == 0) {
      save_checkpoint(checkpoint_path, params, opt);
    }
  }

  save_checkpoint(checkpoint_path, params, opt);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

SampleResult sample_chain(const PredictorFn& predictor, const Tensor& y, const Schedule& s,
                          const ChainKey& key, const SampleOptions& opts) {
  const int T = s.steps();
  Tensor x_t;
  {
    GaussianParams init;
    init.mean = y;
    init.var = s.kappa() * s.kappa() * s.eta(T);
    if (opts.zero_noise) {
      x_t = sample_isotropic(init, nullptr);
    } else {
      Prng rng = make_prng(key.seed, Stream::Chain, key.chain_id, 0);
      x_t = sample_isotropic(init, &rng);
    }
  }

  SampleResult result;
  if (opts.trace) result.states.push_back(x_t);
  for (int t = T; t >= 1; --t) {
    const Tensor x0_hat = predictor(x_t, y, t);
    require_same_shape(x0_hat, x_t, "sample_chain");
    if (opts.zero_noise) {
      x_t = reverse_step(x_t, x0_hat, t, s, nullptr);
    } else {
      Prng rng = make_prng(key.seed, Stream::Chain, key.chain_id, static_cast<std::uint64_t>(t));
      x_t = reverse_step(x_t, x0_hat, t, s, &rng);
    }
    if (!x_t.all_finite()) {
      throw std::runtime_error("sample_chain: non-finite state after step t=" +
                               std::to_string(t));
    }
    if (opts.trace) result.states.push_back(x_t);
  }
  result.x0 = std::move(x_t);
  return result;
}

SampleResult sample(const PredictorParams& params, const Tensor& y, const Schedule& s,
                    const ChainKey& key, const SampleOptions& opts) {
  return sample_chain(
      [&](const Tensor& x_t, const Tensor& y0, int t) { return predict(params, x_t, y0, t, s); },
      y, s, key, opts);
}

double psnr_from_mse(double mse_value) {
  constexpr double cap_db = 99.0;
  if (mse_value <= 0.0) return cap_db;
  return std::min(cap_db, 10.0 * std::log10(1.0 / mse_value));
}

EvalReport evaluate_pairs(const std::vector<Tensor>& restored, const std::vector<Tensor>& hq) {
  if (restored.empty() || restored.size() != hq.size()) {
    throw std::invalid_argument("evaluate_pairs: need matching non-empty sets");
  }
  EvalReport report;
  report.per_image.reserve(restored.size());
  for (std::size_t i = 0; i < restored.size(); ++i) {
    ImageMetrics m;
    m.mse = mse(restored[i], hq[i]);
    m.psnr = psnr_from_mse(m.mse);
    report.mean_mse += m.mse;
    report.mean_psnr += m.psnr;
    report.per_image.push_back(m);
  }
  report.mean_mse /= static_cast<double>(restored.size());
  report.mean_psnr /= static_cast<double>(restored.size());
  return report;
}

EvalReport evaluate(const PredictorParams& params, const std::vector<Tensor>& lq,
                    const std::vector<Tensor>& hq, const Schedule& s, std::uint64_t seed) {
  if (lq.empty() || lq.size() != hq.size()) {
    throw std::invalid_argument("evaluate: need matching non-empty LQ/HQ sets");
  }
  std::vector<Tensor> restored;
  restored.reserve(lq.size());
  for (std::size_t i = 0; i < lq.size(); ++i) {
    SampleResult res = sample(params, lq[i], s, ChainKey{seed, i});
    res.x0.clamp(0.0, 1.0);  // clamp only at evaluation, never inside the chain
    restored.push_back(std::move(res.x0));
  }
  return evaluate_pairs(restored, hq);
}

void write_eval_csv(const EvalReport& report, std::ostream& os) {
  os << "index,mse,psnr\n";
  char line[128];
  for (std::size_t i = 0; i < report.per_image.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", i, report.per_image[i].mse,
                  report.per_image[i].psnr);
    os << line;
  }
  std::snprintf(line, sizeof(line), "mean,%.17g,%.17g\n", report.mean_mse, report.mean_psnr);
  os << line;
}

}  // namespace resshift
