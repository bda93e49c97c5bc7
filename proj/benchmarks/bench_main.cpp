#include <benchmark/benchmark.h>

#include "resshift/degrade.hpp"
#include "resshift/kernel.hpp"
#include "resshift/objective.hpp"
#include "resshift/pipeline.hpp"
#include "resshift/predictor.hpp"
#include "resshift/schedule.hpp"

using namespace resshift;

namespace {

void BM_BuildSchedule(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_schedule({T, 0.3, 2.0, 0.001, 0.999}));
  }
}
BENCHMARK(BM_BuildSchedule)->Arg(15)->Arg(1000);

void BM_SampleMarginal(benchmark::State& state) {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  const Tensor x0({1, 32, 32}, 0.3);
  const Tensor y0({1, 32, 32}, 0.7);
  Prng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_marginal(x0, y0, 9, s, &rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(x0.size()));
}
BENCHMARK(BM_SampleMarginal);

void BM_PredictForward(benchmark::State& state) {
  const Schedule s = build_schedule({4, 0.3, 2.0, 0.001, 0.999});
  const auto lay = PredictorLayout::reference(1);
  Prng init(2);
  const auto params = PredictorParams::initialized(lay, init);
  Prng rng(3);
  Tensor x_t({1, 32, 32}), y0({1, 32, 32});
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    x_t[i] = rng.uniform_in(-0.5, 1.5);
    y0[i] = rng.uniform();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict(params, x_t, y0, 2, s));
  }
}
BENCHMARK(BM_PredictForward);

void BM_LossAndGradient(benchmark::State& state) {
  const Schedule s = build_schedule({4, 0.3, 2.0, 0.001, 0.999});
  const auto lay = PredictorLayout::reference(1);
  Prng init(4);
  const auto params = PredictorParams::initialized(lay, init);
  ObjectiveSpec obj;
  obj.lambda = 1.0;
  obj.perceptual.emplace();
  Prng rng(5);
  std::vector<TrainSample> batch;
  for (int k = 0; k < 4; ++k) {
    TrainSample smp;
    smp.x_t = Tensor({1, 32, 32});
    smp.y0 = Tensor({1, 32, 32});
    smp.x0 = Tensor({1, 32, 32});
    for (std::size_t i = 0; i < smp.x_t.size(); ++i) {
      smp.x_t[i] = rng.uniform_in(-0.5, 1.5);
      smp.y0[i] = rng.uniform();
      smp.x0[i] = rng.uniform();
    }
    smp.t = 1 + k % 4;
    batch.push_back(std::move(smp));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradient(params, batch, obj, s));
  }
}
BENCHMARK(BM_LossAndGradient);

void BM_DegradeSuperres(benchmark::State& state) {
  DegradationSpec spec;
  Prng img_rng(6);
  const Tensor x0 = make_toy_image(ToyKind::Blobs, 1, 32, 32, img_rng);
  std::uint64_t i = 0;
  for (auto _ : state) {
    Prng rng(7, i++);
    benchmark::DoNotOptimize(degrade_superres(x0, spec, rng));
  }
}
BENCHMARK(BM_DegradeSuperres);

void BM_SampleChain(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const Schedule s = build_schedule({T, 0.3, 2.0, 0.001, 0.999});
  const auto lay = PredictorLayout::reference(1);
  Prng init(8);
  const auto params = PredictorParams::initialized(lay, init);
  Prng rng(9);
  Tensor y({1, 32, 32});
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng.uniform();
  std::uint64_t chain = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample(params, y, s, ChainKey{1, chain++}));
  }
}
BENCHMARK(BM_SampleChain)->Arg(4)->Arg(15);

}  // namespace

BENCHMARK_MAIN();
