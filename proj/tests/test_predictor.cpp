#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "resshift/predictor.hpp"
#include "resshift/schedule.hpp"
#include "support/grad_check.hpp"

using namespace resshift;

namespace {

Tensor random_tensor(std::vector<int> shape, Prng& rng, double lo = 0.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform_in(lo, hi);
  return t;
}

TrainSample random_sample(const PredictorLayout& lay, int h, int w, int t, Prng& rng) {
  TrainSample smp;
  smp.x_t = random_tensor({lay.data_channels, h, w}, rng, -0.5, 1.5);
  smp.y0 = random_tensor({lay.data_channels, h, w}, rng);
  smp.x0 = random_tensor({lay.data_channels, h, w}, rng);
  smp.t = t;
  return smp;
}

}  // namespace

TEST_CASE("all-zero parameters give the identity on x_t") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  const auto layout = PredictorLayout::reference(1);
  const auto params = PredictorParams::zeros(layout);
  Prng rng(5);
  const Tensor x_t = random_tensor({1, 8, 8}, rng, -1.0, 2.0);
  const Tensor y0 = random_tensor({1, 8, 8}, rng);
  const Tensor out = predict(params, x_t, y0, 7, s);
  CHECK(max_abs_diff(out, x_t) == 0.0);
}

TEST_CASE("predict is deterministic and shape preserving") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  for (const auto& shape : {std::vector<int>{1, 16, 16}, std::vector<int>{3, 8, 8}}) {
    CAPTURE(shape[0]);
    const auto layout = PredictorLayout::reference(shape[0]);
    Prng init(1);
    const auto params = PredictorParams::initialized(layout, init);
    Prng rng(2);
    const Tensor x_t = random_tensor(shape, rng);
    const Tensor y0 = random_tensor(shape, rng);
    const Tensor a = predict(params, x_t, y0, 3, s);
    const Tensor b = predict(params, x_t, y0, 3, s);
    CHECK(a.shape() == shape);
    CHECK(max_abs_diff(a, b) == 0.0);
  }
}

TEST_CASE("timestep embedding basics") {
  const auto e = timestep_embedding(5, 32);
  CHECK(e.size() == 32);
  CHECK(e[0] == doctest::Approx(std::sin(5.0)));
  CHECK(e[16] == doctest::Approx(std::cos(5.0)));
  // adjacent steps stay close in the low-frequency tail
  const auto f = timestep_embedding(6, 32);
  CHECK(std::fabs(e[15] - f[15]) < 1e-3);
}

TEST_CASE("output moves continuously with the timestep embedding") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  const auto layout = PredictorLayout::reference(1, 8, 16);
  Prng init(3);
  const auto params = PredictorParams::initialized(layout, init);
  Prng rng(4);
  const Tensor x_t = random_tensor({1, 8, 8}, rng);
  const Tensor y0 = random_tensor({1, 8, 8}, rng);

  // product of layer infinity-norms bounds the network's sensitivity;
  // silu has derivative magnitude < 1.1
  double lipschitz = 1.0;
  std::size_t off = 0;
  for (const auto& l : layout.layers) {
    double max_row = 0.0;
    const std::size_t taps = l.kind == LayerKind::Conv3x3 ? 9 : 1;
    for (int oc = 0; oc < l.out_channels; ++oc) {
      double row = 0.0;
      for (std::size_t i = 0; i < taps * l.in_channels; ++i) {
        row += std::fabs(params.theta[off + oc * taps * l.in_channels + i]);
      }
      max_row = std::max(max_row, row);
    }
    lipschitz *= max_row * (l.act == Activation::Silu ? 1.1 : 1.0);
    off += l.param_count();
  }

  for (int t = 1; t < 15; ++t) {
    const Tensor a = predict(params, x_t, y0, t, s);
    const Tensor b = predict(params, x_t, y0, t + 1, s);
    const auto ea = timestep_embedding(t, layout.t_embed_dim);
    const auto eb = timestep_embedding(t + 1, layout.t_embed_dim);
    double demb = 0.0;
    for (std::size_t i = 0; i < ea.size(); ++i) demb = std::max(demb, std::fabs(ea[i] - eb[i]));
    CHECK(max_abs_diff(a, b) <= lipschitz * demb + 1e-12);
  }
}

TEST_CASE("gradients match finite differences per layer type") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  ObjectiveSpec obj;  // plain L2

  SUBCASE("dense only") {
    PredictorLayout lay;
    lay.data_channels = 1;
    lay.t_embed_dim = 4;
    lay.layers = {{LayerKind::Dense, 6, 5, Activation::Silu},
                  {LayerKind::Dense, 5, 1, Activation::None}};
    Prng init(11);
    auto params = PredictorParams::initialized(lay, init);
    // exercise the head weights too
    Prng head(12);
    for (auto& v : params.theta) {
      if (v == 0.0) v = 0.1 * head.normal();
    }
    Prng rng(13);
    const std::vector<TrainSample> batch = {random_sample(lay, 6, 6, 3, rng)};
    const auto res = testsupport::finite_difference_check(params, batch, obj, s, 64, 21);
    CHECK(res.checked > 0);
    CHECK(res.max_rel_err < 1e-4);
  }

  SUBCASE("conv3x3 only") {
    PredictorLayout lay;
    lay.data_channels = 1;
    lay.t_embed_dim = 2;
    lay.layers = {{LayerKind::Conv3x3, 4, 4, Activation::Silu},
                  {LayerKind::Conv3x3, 4, 1, Activation::None}};
    Prng init(14);
    auto params = PredictorParams::initialized(lay, init);
    Prng head(15);
    for (auto& v : params.theta) {
      if (v == 0.0) v = 0.1 * head.normal();
    }
    Prng rng(16);
    const std::vector<TrainSample> batch = {random_sample(lay, 5, 7, 2, rng)};
    const auto res = testsupport::finite_difference_check(params, batch, obj, s, 64, 22);
    CHECK(res.checked > 0);
    CHECK(res.max_rel_err < 1e-4);
  }

  SUBCASE("reference layout with identity skip, batch of two") {
    const auto lay = PredictorLayout::reference(2, 6, 8);
    Prng init(17);
    auto params = PredictorParams::initialized(lay, init);
    Prng head(18);
    for (auto& v : params.theta) {
      if (v == 0.0) v = 0.1 * head.normal();
    }
    Prng rng(19);
    const std::vector<TrainSample> batch = {random_sample(lay, 6, 6, 1, rng),
                                            random_sample(lay, 6, 6, 9, rng)};
    const auto res = testsupport::finite_difference_check(params, batch, obj, s, 64, 23);
    CHECK(res.checked > 0);
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("single affine layer gradient by hand") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  PredictorLayout lay;
  lay.data_channels = 1;
  lay.t_embed_dim = 1;
  lay.identity_skip = false;
  lay.layers = {{LayerKind::Dense, 3, 1, Activation::None}};
  PredictorParams params = PredictorParams::zeros(lay);
  params.theta = {0.4, -0.3, 0.2, 0.05};  // w_xt, w_y0, w_emb, bias

  TrainSample smp;
  smp.x_t = Tensor({1, 1, 1}, 0.7);
  smp.y0 = Tensor({1, 1, 1}, 0.9);
  smp.x0 = Tensor({1, 1, 1}, 0.25);
  smp.t = 4;

  const double emb = timestep_embedding(4, 1)[0];
  const double pred = 0.4 * 0.7 + (-0.3) * 0.9 + 0.2 * emb + 0.05;
  const double resid = pred - 0.25;

  ObjectiveSpec obj;
  const auto [loss, grad] = loss_and_gradient(params, {smp}, obj, s);
  CHECK(loss == doctest::Approx(resid * resid).epsilon(1e-12));
  CHECK(grad.d_theta[0] == doctest::Approx(2.0 * resid * 0.7).epsilon(1e-12));
  CHECK(grad.d_theta[1] == doctest::Approx(2.0 * resid * 0.9).epsilon(1e-12));
  CHECK(grad.d_theta[2] == doctest::Approx(2.0 * resid * emb).epsilon(1e-12));
  CHECK(grad.d_theta[3] == doctest::Approx(2.0 * resid).epsilon(1e-12));
}

TEST_CASE("parameter count round trip over assorted layouts") {
  Prng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    PredictorLayout lay;
    lay.data_channels = 1 + static_cast<int>(rng.uniform_index(3));
    lay.t_embed_dim = 2 + static_cast<int>(rng.uniform_index(6));
    const int hidden = 2 + static_cast<int>(rng.uniform_index(5));
    const auto kind = rng.uniform() < 0.5 ? LayerKind::Dense : LayerKind::Conv3x3;
    lay.layers = {{kind, lay.input_channels(), hidden, Activation::Silu},
                  {LayerKind::Dense, hidden, lay.data_channels, Activation::None}};
    auto params = PredictorParams::zeros(lay);
    CHECK(params.theta.size() == lay.param_count());

    const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
    Prng data(32);
    const std::vector<TrainSample> batch = {random_sample(lay, 6, 6, 2, data)};
    CHECK_NOTHROW(loss_and_gradient(params, batch, ObjectiveSpec{}, s));

    params.theta.push_back(0.0);
    CHECK_THROWS_AS(predict(params, batch[0].x_t, batch[0].y0, 2, s), std::invalid_argument);
  }
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  const auto lay = PredictorLayout::reference(1, 4, 4);
  Prng init(41);
  auto params = PredictorParams::initialized(lay, init);
  const auto before = params.theta;
  auto state = AdamState::for_params(params);
  Gradient g;
  g.d_theta.assign(params.theta.size(), 0.0);
  CHECK(adam_step(params, g, state, 0.1));
  CHECK(state.step == 1);
  CHECK(params.theta == before);
}

TEST_CASE("adam rejects non-finite gradients without touching state") {
  const auto lay = PredictorLayout::reference(1, 4, 4);
  auto params = PredictorParams::zeros(lay);
  auto state = AdamState::for_params(params);
  Gradient g;
  g.d_theta.assign(params.theta.size(), 0.5);
  g.d_theta[3] = std::nan("");
  CHECK_FALSE(adam_step(params, g, state, 0.1));
  CHECK(state.step == 0);
  CHECK(params.theta[3] == 0.0);
}

TEST_CASE("adam constant-gradient displacement matches the scalar recursion") {
  const double g = 0.37, lr = 0.01;
  const int steps = 25;
  const AdamConfig cfg;

  // independent scalar recursion
  double m = 0.0, v = 0.0, theta_ref = 0.3;
  for (int k = 1; k <= steps; ++k) {
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    const double mhat = m / (1 - std::pow(cfg.beta1, k));
    const double vhat = v / (1 - std::pow(cfg.beta2, k));
    theta_ref -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }

  PredictorLayout lay;
  lay.data_channels = 1;
  lay.t_embed_dim = 1;
  lay.identity_skip = false;
  lay.layers = {{LayerKind::Dense, 3, 1, Activation::None}};
  auto params = PredictorParams::zeros(lay);
  for (auto& t : params.theta) t = 0.3;
  auto state = AdamState::for_params(params);
  Gradient grad;
  grad.d_theta.assign(params.theta.size(), g);
  for (int k = 0; k < steps; ++k) CHECK(adam_step(params, grad, state, lr));
  for (const double t : params.theta) CHECK(t == doctest::Approx(theta_ref).epsilon(1e-12));
}

TEST_CASE("cosine learning rate endpoints") {
  CHECK(cosine_lr(0, 1000, 1e-3, 1e-4) == doctest::Approx(1e-3));
  CHECK(cosine_lr(999, 1000, 1e-3, 1e-4) == doctest::Approx(1e-4));
  CHECK(cosine_lr(0, 1, 5e-5, 2e-5) == 5e-5);
  // halfway point sits at the average
  CHECK(cosine_lr(500, 1001, 1e-3, 1e-4) == doctest::Approx(0.55e-3).epsilon(1e-6));
}

TEST_CASE("checkpoint round trip preserves every byte of state") {
  const auto lay = PredictorLayout::reference(2, 5, 8);
  Prng init(51);
  auto params = PredictorParams::initialized(lay, init);
  auto state = AdamState::for_params(params);
  Prng noise(52);
  for (auto& v : state.m) v = noise.normal();
  for (auto& v : state.v) v = std::fabs(noise.normal());
  state.step = 77;

  const std::string path = "ckpt_roundtrip_test.bin";
  save_checkpoint(path, params, state);
  const Checkpoint ck = load_checkpoint(path);
  CHECK(ck.params.theta == params.theta);
  CHECK(ck.params.layout.param_count() == lay.param_count());
  CHECK(ck.params.layout.data_channels == 2);
  CHECK(ck.opt.m == state.m);
  CHECK(ck.opt.v == state.v);
  CHECK(ck.opt.step == 77);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loading rejects corruption") {
  const std::string path = "ckpt_corrupt_test.bin";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("NOTMAGIC-and-some-garbage", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("bad magic"),
                       std::runtime_error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_checkpoint("does_not_exist.ckpt"), std::runtime_error);
}

TEST_CASE("non-finite loss reports the offending batch index") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  const auto lay = PredictorLayout::reference(1, 4, 4);
  Prng init(61);
  auto params = PredictorParams::initialized(lay, init);
  Prng rng(62);
  std::vector<TrainSample> batch = {random_sample(lay, 6, 6, 2, rng),
                                    random_sample(lay, 6, 6, 3, rng)};
  batch[1].x_t[0] = std::numeric_limits<double>::infinity();
  try {
    loss_and_gradient(params, batch, ObjectiveSpec{}, s);
    FAIL("expected NonFiniteLossError");
  } catch (const NonFiniteLossError& e) {
    CHECK(e.batch_index == 1);
  }
}

TEST_CASE("batch fan-out is deterministic across worker counts") {
  const Schedule s = build_schedule({15, 0.3, 2.0, 0.001, 0.999});
  const auto lay = PredictorLayout::reference(1, 6, 8);
  Prng init(71);
  const auto params = PredictorParams::initialized(lay, init);
  Prng rng(72);
  std::vector<TrainSample> batch;
  for (int k = 0; k < 5; ++k) batch.push_back(random_sample(lay, 8, 8, 1 + k, rng));

  setenv("RESSHIFT_THREADS", "1", 1);
  const auto single = loss_and_gradient(params, batch, ObjectiveSpec{}, s);
  setenv("RESSHIFT_THREADS", "3", 1);
  const auto pooled = loss_and_gradient(params, batch, ObjectiveSpec{}, s);
  unsetenv("RESSHIFT_THREADS");
  CHECK(single.first == pooled.first);
  CHECK(single.second.d_theta == pooled.second.d_theta);
}
