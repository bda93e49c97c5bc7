// resshift: residual-shifting diffusion toolkit.
//
// Verbs: schedule, degrade, train, sample, eval, verify.
// Exit codes: 0 success, 1 domain failure (e.g. failed oracle), 2 usage.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "resshift/degrade.hpp"
#include "resshift/image_io.hpp"
#include "resshift/kernel.hpp"
#include "resshift/oracle.hpp"
#include "resshift/pipeline.hpp"
#include "resshift/predictor.hpp"
#include "resshift/schedule.hpp"
#include "resshift/tensor_io.hpp"
#include "resshift/version.hpp"

namespace {

using namespace resshift;

void print_banner(const std::string& verb, const std::string& config_text, std::uint64_t seed) {
  std::fprintf(stderr, "resshift %s | verb %s | config %016llx | seed %llu\n", kVersion,
               verb.c_str(),
               static_cast<unsigned long long>(fnv1a_digest(config_text)),
               static_cast<unsigned long long>(seed));
}

Tensor load_signal(const std::string& path) {
  if (has_image_extension(path)) return read_image_file(path);
  return read_tensor_file(path);
}

void store_signal(const std::string& path, const Tensor& t) {
  if (has_image_extension(path)) {
    Tensor img = t;
    img.clamp(0.0, 1.0);
    write_image_file(path, img);
  } else {
    write_tensor_file(path, t);
  }
}

ToyKind toy_kind_from_name(const std::string& name) {
  if (name == "blobs") return ToyKind::Blobs;
  if (name == "stripes") return ToyKind::Stripes;
  if (name == "checker") return ToyKind::Checker;
  if (name == "mixed") return ToyKind::Mixed;
  throw CLI::ValidationError("--toy", "unknown toy kind '" + name + "'");
}

DegradationSpec degradation_from_name(const std::string& name) {
  DegradationSpec spec;
  if (name == "identity") {
    spec.kind = DegradationKind::Identity;
  } else if (name == "superres") {
    spec.kind = DegradationKind::SuperRes;
  } else if (name == "inpaint-box") {
    spec.kind = DegradationKind::Inpaint;
    spec.mask.type = MaskType::Box;
  } else if (name == "inpaint-irregular") {
    spec.kind = DegradationKind::Inpaint;
    spec.mask.type = MaskType::Irregular;
  } else if (name == "inpaint-half") {
    spec.kind = DegradationKind::Inpaint;
    spec.mask.type = MaskType::Half;
  } else if (name == "inpaint-expand") {
    spec.kind = DegradationKind::Inpaint;
    spec.mask.type = MaskType::Expand;
  } else {
    throw CLI::ValidationError("--spec", "unknown degradation '" + name + "'");
  }
  return spec;
}

struct ScheduleArgs {
  int T = 15;
  double p = 0.3;
  double kappa = 2.0;
  double eta_1_cap = 0.001;
  double eta_T = 0.999;
  double signal_power = 1.0;
  std::string export_path;
};

int run_schedule(const ScheduleArgs& a) {
  ScheduleParams params{a.T, a.p, a.kappa, a.eta_1_cap, a.eta_T};
  const Schedule s = build_schedule(params);
  if (!a.export_path.empty()) {
    std::ofstream os(a.export_path, std::ios::binary);
    if (!os) throw std::runtime_error("schedule: cannot open " + a.export_path);
    write_schedule_csv(s, a.signal_power, os);
  } else {
    write_schedule_csv(s, a.signal_power, std::cout);
  }
  return 0;
}

struct DegradeArgs {
  std::string in_path;
  std::string toy_kind;
  int toy_count = 64;
  int toy_size = 32;
  int toy_channels = 1;
  std::string spec_name = "superres";
  int scale = 2;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string out_hq_path;
};

int run_degrade(const DegradeArgs& a) {
  std::vector<Tensor> hq;
  if (!a.toy_kind.empty()) {
    hq = make_toy_dataset(toy_kind_from_name(a.toy_kind), a.toy_count, a.toy_channels,
                          a.toy_size, a.seed);
  } else {
    const Tensor stacked = load_signal(a.in_path);
    hq = stacked.ndim() == 4 ? split_first_axis(stacked) : std::vector<Tensor>{stacked};
  }
  DegradationSpec spec = degradation_from_name(a.spec_name);
  spec.scale = a.scale;
  std::vector<Tensor> lq;
  lq.reserve(hq.size());
  for (std::size_t i = 0; i < hq.size(); ++i) {
    Prng rng = make_prng(a.seed, Stream::Degrade, i);
    lq.push_back(degrade(hq[i], spec, rng));
  }
  if (lq.size() == 1 && has_image_extension(a.out_path)) {
    store_signal(a.out_path, lq.front());
  } else {
    write_tensor_file(a.out_path, stack_first_axis(lq));
  }
  if (!a.out_hq_path.empty()) {
    write_tensor_file(a.out_hq_path, stack_first_axis(hq));
  }
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::string data_path;
  std::string toy_kind = "blobs";
  int toy_count = 256;
  int toy_size = 32;
  int toy_channels = 1;
  std::string ckpt_out = "model.ckpt";
  std::string curve_path;
};

int run_train(const TrainArgs& a) {
  const RunConfig cfg = parse_run_config_file(a.config_path);
  std::vector<Tensor> dataset;
  if (!a.data_path.empty()) {
    const Tensor stacked = load_signal(a.data_path);
    dataset = stacked.ndim() == 4 ? split_first_axis(stacked) : std::vector<Tensor>{stacked};
  } else {
    dataset = make_toy_dataset(toy_kind_from_name(a.toy_kind), a.toy_count, a.toy_channels,
                               a.toy_size, cfg.seed);
  }
  const TrainReport report = train(cfg, dataset, a.ckpt_out);
  if (!a.curve_path.empty()) {
    std::ofstream os(a.curve_path, std::ios::binary);
    if (!os) throw std::runtime_error("train: cannot open " + a.curve_path);
    write_loss_curve_csv(report, os);
  }
  std::fprintf(stderr, "train: %ld iterations in %.1fs, final loss %.6g, checkpoint %s\n",
               static_cast<long>(report.loss_curve.size()), report.wall_seconds,
               report.loss_curve.back(), report.checkpoint_path.c_str());
  return 0;
}

struct SampleArgs {
  std::string ckpt_path;
  std::string in_path;
  std::string out_path;
  std::string trace_dir;
  std::uint64_t seed = 0;
  int T = 0;          // 0 = config of the checkpointed run cannot be known; use flags
  double p = 0.3;
  double kappa = 2.0;
};

int run_sample(const SampleArgs& a) {
  const Checkpoint ck = load_checkpoint(a.ckpt_path);
  const Tensor y = load_signal(a.in_path);
  ScheduleParams params;
  params.T = a.T;
  params.p = a.p;
  params.kappa = a.kappa;
  const Schedule s = build_schedule(params);
  SampleOptions opts;
  opts.trace = !a.trace_dir.empty();
  const SampleResult res = sample(ck.params, y, s, ChainKey{a.seed, 0}, opts);
  Tensor out = res.x0;
  out.clamp(0.0, 1.0);
  store_signal(a.out_path, out);
  if (opts.trace) {
    std::filesystem::create_directories(a.trace_dir);
    for (std::size_t i = 0; i < res.states.size(); ++i) {
      const int t = s.steps() - static_cast<int>(i);
      char name[64];
      std::snprintf(name, sizeof(name), "/state_t%04d.rsten", t);
      write_tensor_file(a.trace_dir + name, res.states[i]);
    }
  }
  return 0;
}

struct EvalArgs {
  std::string ckpt_path;
  std::string testset_prefix;
  std::string out_path;
  std::uint64_t seed = 0;
  int T = 4;
  double p = 0.3;
  double kappa = 2.0;
};

int run_eval(const EvalArgs& a) {
  const Checkpoint ck = load_checkpoint(a.ckpt_path);
  const std::vector<Tensor> hq = split_first_axis(read_tensor_file(a.testset_prefix + ".hq.rsten"));
  const std::vector<Tensor> lq = split_first_axis(read_tensor_file(a.testset_prefix + ".lq.rsten"));
  ScheduleParams params;
  params.T = a.T;
  params.p = a.p;
  params.kappa = a.kappa;
  const Schedule s = build_schedule(params);
  const EvalReport report = evaluate(ck.params, lq, hq, s, a.seed);
  if (!a.out_path.empty()) {
    std::ofstream os(a.out_path, std::ios::binary);
    if (!os) throw std::runtime_error("eval: cannot open " + a.out_path);
    write_eval_csv(report, os);
  }
  write_eval_csv(report, std::cout);
  return 0;
}

struct VerifyArgs {
  std::string suite = "all";
  std::uint64_t seed = 0;
  int T = 15;
  double p = 0.3;
  double kappa = 2.0;
  std::string out_path;
};

int run_verify(const VerifyArgs& a) {
  ScheduleParams params;
  params.T = a.T;
  params.p = a.p;
  params.kappa = a.kappa;
  const Schedule s = build_schedule(params);
  const auto reports = run_suite(s, a.suite, a.seed);
  print_reports_table(reports, std::cout);
  if (!a.out_path.empty()) {
    std::ofstream os(a.out_path, std::ios::binary);
    if (!os) throw std::runtime_error("verify: cannot open " + a.out_path);
    write_reports_json(reports, os);
  }
  if (!all_pass(reports)) {
    for (const auto& r : reports) {
      if (!r.pass) {
        std::fprintf(stderr, "verify: FAILED %s statistic %.6e tolerance %.6e\n", r.name.c_str(),
                     r.statistic, r.tolerance);
      }
    }
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"residual-shifting diffusion toolkit"};
  app.require_subcommand(1);

  ScheduleArgs sa;
  auto* sched = app.add_subcommand("schedule", "build a shifting schedule and export its curves");
  sched->add_option("--T", sa.T, "step count")->required();
  sched->add_option("--p", sa.p, "growth exponent")->required();
  sched->add_option("--kappa", sa.kappa, "noise scale")->required();
  sched->add_option("--eta1-cap", sa.eta_1_cap, "cap on eta_1");
  sched->add_option("--eta-T", sa.eta_T, "terminal eta");
  sched->add_option("--signal-power", sa.signal_power, "signal power for the noise curve");
  sched->add_option("--export", sa.export_path, "write CSV here instead of stdout");

  DegradeArgs da;
  auto* deg = app.add_subcommand("degrade", "synthesize LQ data from HQ data");
  deg->add_option("--in", da.in_path, "HQ input (.rsten/.pgm/.ppm)");
  deg->add_option("--toy", da.toy_kind, "generate a toy HQ dataset: blobs|stripes|checker|mixed");
  deg->add_option("--count", da.toy_count, "toy dataset size");
  deg->add_option("--size", da.toy_size, "toy image side length");
  deg->add_option("--channels", da.toy_channels, "toy image channels");
  deg->add_option("--spec", da.spec_name,
                  "identity|superres|inpaint-box|inpaint-irregular|inpaint-half|inpaint-expand");
  deg->add_option("--scale", da.scale, "downsampling factor");
  deg->add_option("--seed", da.seed, "rng seed");
  deg->add_option("--out", da.out_path, "LQ output file")->required();
  deg->add_option("--out-hq", da.out_hq_path, "also write the HQ tensors here");

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "run the training loop");
  trn->add_option("--config", ta.config_path, "run configuration file")->required();
  trn->add_option("--data", ta.data_path, "HQ dataset (.rsten, shape (n,c,h,w))");
  trn->add_option("--toy", ta.toy_kind, "toy dataset kind when --data is absent");
  trn->add_option("--count", ta.toy_count, "toy dataset size");
  trn->add_option("--size", ta.toy_size, "toy image side length");
  trn->add_option("--channels", ta.toy_channels, "toy image channels");
  trn->add_option("--ckpt-out", ta.ckpt_out, "checkpoint output path");
  trn->add_option("--curve", ta.curve_path, "loss curve CSV output");

  SampleArgs smp;
  auto* sam = app.add_subcommand("sample", "restore an LQ input with a trained model");
  sam->add_option("--ckpt", smp.ckpt_path, "checkpoint path")->required();
  sam->add_option("--in", smp.in_path, "LQ input, pre-upsampled to HQ shape")->required();
  sam->add_option("--out", smp.out_path, "restored output")->required();
  sam->add_option("--trace", smp.trace_dir, "directory for per-step states");
  sam->add_option("--seed", smp.seed, "rng seed");
  sam->add_option("--T", smp.T, "schedule steps")->required();
  sam->add_option("--p", smp.p, "schedule growth exponent");
  sam->add_option("--kappa", smp.kappa, "schedule noise scale");

  EvalArgs ea;
  auto* evl = app.add_subcommand("eval", "evaluate a model on a paired testset");
  evl->add_option("--ckpt", ea.ckpt_path, "checkpoint path")->required();
  evl->add_option("--testset", ea.testset_prefix,
                  "prefix of <prefix>.hq.rsten / <prefix>.lq.rsten")->required();
  evl->add_option("--out", ea.out_path, "metrics CSV output");
  evl->add_option("--seed", ea.seed, "rng seed");
  evl->add_option("--T", ea.T, "schedule steps");
  evl->add_option("--p", ea.p, "schedule growth exponent");
  evl->add_option("--kappa", ea.kappa, "schedule noise scale");

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "run the closed-form verification oracles");
  ver->add_option("--suite", va.suite, "all|marginal|posterior|flow|snr");
  ver->add_option("--seed", va.seed, "rng seed");
  ver->add_option("--T", va.T, "schedule steps");
  ver->add_option("--p", va.p, "schedule growth exponent");
  ver->add_option("--kappa", va.kappa, "schedule noise scale");
  ver->add_option("--out", va.out_path, "machine-readable report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::ostringstream flags;
  for (int i = 1; i < argc; ++i) flags << argv[i] << " ";

  try {
    if (sched->parsed()) {
      print_banner("schedule", flags.str(), 0);
      return run_schedule(sa);
    }
    if (deg->parsed()) {
      if (da.in_path.empty() == da.toy_kind.empty()) {
        std::fprintf(stderr, "resshift degrade: exactly one of --in or --toy is required\n%s\n",
                     deg->help().c_str());
        return 2;
      }
      print_banner("degrade", flags.str(), da.seed);
      return run_degrade(da);
    }
    if (trn->parsed()) {
      std::ifstream cfg_in(ta.config_path);
      std::ostringstream cfg_text;
      cfg_text << cfg_in.rdbuf();
      const RunConfig cfg = parse_run_config_file(ta.config_path);
      print_banner("train", cfg_text.str(), cfg.seed);
      return run_train(ta);
    }
    if (sam->parsed()) {
      print_banner("sample", flags.str(), smp.seed);
      return run_sample(smp);
    }
    if (evl->parsed()) {
      print_banner("eval", flags.str(), ea.seed);
      return run_eval(ea);
    }
    if (ver->parsed()) {
      print_banner("verify", flags.str(), va.seed);
      return run_verify(va);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "resshift: error: %s\n", e.what());
    return 1;
  }
  return 2;
}
