#include "resshift/objective.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "conv_ops.hpp"
#include "resshift/kernel.hpp"
#include "resshift/rng.hpp"

namespace resshift {

LossValue data_loss(const Tensor& x0_hat, const Tensor& x0, int t, const ObjectiveSpec& spec,
                    const Schedule& s) {
  require_same_shape(x0_hat, x0, "data_loss");
  const double n = static_cast<double>(x0_hat.size());
  LossValue lv;
  lv.d_pred = Tensor(x0_hat.shape());
  double acc = 0.0;
  if (spec.data_term == DataTerm::L2) {
    for (std::size_t i = 0; i < x0_hat.size(); ++i) {
      const double d = x0_hat[i] - x0[i];
      acc += d * d;
      lv.d_pred[i] = 2.0 * d / n;
    }
  } else {
    for (std::size_t i = 0; i < x0_hat.size(); ++i) {
      const double d = x0_hat[i] - x0[i];
      acc += std::fabs(d);
      lv.d_pred[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
    }
  }
  lv.value = acc / n;
  if (spec.use_elbo_weights) {
    const double w = elbo_weight(t, s).value;
    lv.value *= w;
    for (std::size_t i = 0; i < lv.d_pred.size(); ++i) lv.d_pred[i] *= w;
  }
  return lv;
}

namespace {

constexpr double kNormEps = 0.1;
constexpr int kStackLayers = 2;

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_derivative(double x) {
  const double sig = 1.0 / (1.0 + std::exp(-x));
  return sig * (1.0 + x * (1.0 - sig));
}

struct StackWeights {
  std::vector<double> w1, b1;  // conv3x3 C -> F
  std::vector<double> w2, b2;  // conv3x3 F -> F
};

StackWeights make_stack(const PerceptualSpec& spec) {
  StackWeights sw;
  const int c = spec.data_channels;
  const int f = spec.feature_channels;
  sw.w1.resize(9u * c * f);
  sw.b1.assign(f, 0.0);
  sw.w2.resize(9u * f * f);
  sw.b2.assign(f, 0.0);
  Prng g1 = make_prng(spec.seed, Stream::Perceptual, 1);
  const double sd1 = std::sqrt(2.0 / (9.0 * c));
  for (auto& w : sw.w1) w = sd1 * g1.normal();
  Prng g2 = make_prng(spec.seed, Stream::Perceptual, 2);
  const double sd2 = std::sqrt(2.0 / (9.0 * f));
  for (auto& w : sw.w2) w = sd2 * g2.normal();
  return sw;
}

// y = f / sqrt(|f|^2 + eps) across channels at each pixel
void normalize_features(const std::vector<double>& feat, int ch, int hw,
                        std::vector<double>& out) {
  out.resize(feat.size());
  for (int p = 0; p < hw; ++p) {
    double sq = kNormEps;
    for (int c = 0; c < ch; ++c) {
      const double v = feat[static_cast<std::size_t>(c) * hw + p];
      sq += v * v;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (int c = 0; c < ch; ++c) {
      out[static_cast<std::size_t>(c) * hw + p] = feat[static_cast<std::size_t>(c) * hw + p] * inv;
    }
  }
}

// adjoint of normalize_features into d_feat
void normalize_backward(const std::vector<double>& feat, const std::vector<double>& d_norm,
                        int ch, int hw, std::vector<double>& d_feat) {
  d_feat.assign(feat.size(), 0.0);
  for (int p = 0; p < hw; ++p) {
    double sq = kNormEps;
    double dot = 0.0;
    for (int c = 0; c < ch; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * hw + p;
      sq += feat[i] * feat[i];
      dot += feat[i] * d_norm[i];
    }
    const double inv = 1.0 / std::sqrt(sq);
    const double inv3 = inv * inv * inv;
    for (int c = 0; c < ch; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * hw + p;
      d_feat[i] = inv * d_norm[i] - feat[i] * dot * inv3;
    }
  }
}

struct StackFeatures {
  std::vector<double> pre1, post1, pre2, post2;
};

void stack_forward(const StackWeights& sw, const PerceptualSpec& spec, const double* img, int h,
                   int w, StackFeatures& out) {
  const int c = spec.data_channels;
  const int f = spec.feature_channels;
  const int hw = h * w;
  out.pre1.resize(static_cast<std::size_t>(f) * hw);
  detail::conv3_forward(img, sw.w1.data(), sw.b1.data(), out.pre1.data(), c, f, h, w);
  out.post1.resize(out.pre1.size());
  for (std::size_t i = 0; i < out.pre1.size(); ++i) out.post1[i] = silu(out.pre1[i]);
  out.pre2.resize(static_cast<std::size_t>(f) * hw);
  detail::conv3_forward(out.post1.data(), sw.w2.data(), sw.b2.data(), out.pre2.data(), f, f, h, w);
  out.post2.resize(out.pre2.size());
  for (std::size_t i = 0; i < out.pre2.size(); ++i) out.post2[i] = silu(out.pre2[i]);
}

}  // namespace

int perceptual_min_extent() { return 1 + 2 * kStackLayers; }

LossValue perceptual_loss(const Tensor& x0_hat, const Tensor& x0, const PerceptualSpec& spec) {
  require_same_shape(x0_hat, x0, "perceptual_loss");
  if (x0_hat.ndim() != 3) {
    throw std::invalid_argument("perceptual_loss: inputs must be (c,h,w), got " +
                                x0_hat.shape_str());
  }
  if (x0_hat.channels() != spec.data_channels) {
    throw std::invalid_argument("perceptual_loss: spec expects " +
                                std::to_string(spec.data_channels) + " channels, got " +
                                std::to_string(x0_hat.channels()));
  }
  if (static_cast<int>(spec.layer_weights.size()) != kStackLayers) {
    throw std::invalid_argument("perceptual_loss: layer_weights must have " +
                                std::to_string(kStackLayers) + " entries");
  }
  for (double w : spec.layer_weights) {
    if (w < 0.0) throw std::invalid_argument("perceptual_loss: layer weights must be >= 0");
  }
  const int h = x0_hat.height();
  const int w = x0_hat.width();
  if (h < perceptual_min_extent() || w < perceptual_min_extent()) {
    throw std::invalid_argument("perceptual_loss: input " + x0_hat.shape_str() +
                                " is smaller than the stack receptive field (" +
                                std::to_string(perceptual_min_extent()) + ")");
  }

  const StackWeights sw = make_stack(spec);
  const int f = spec.feature_channels;
  const int hw = h * w;

  StackFeatures fa, fb;
  stack_forward(sw, spec, x0_hat.data(), h, w, fa);
  stack_forward(sw, spec, x0.data(), h, w, fb);

  std::vector<double> na, nb;
  LossValue lv;
  lv.d_pred = Tensor(x0_hat.shape());

  // per-layer squared distance between unit-normalized features, and the
  // adjoint w.r.t. the a-branch post-activation maps
  std::vector<double> d_post1(fa.post1.size(), 0.0);
  std::vector<double> d_post2(fa.post2.size(), 0.0);
  double value = 0.0;
  std::vector<double> d_norm, d_feat;
  for (int layer = 0; layer < kStackLayers; ++layer) {
    const auto& feat_a = layer == 0 ? fa.post1 : fa.post2;
    const auto& feat_b = layer == 0 ? fb.post1 : fb.post2;
    normalize_features(feat_a, f, hw, na);
    normalize_features(feat_b, f, hw, nb);
    const double wl = spec.layer_weights[layer];
    const double scale = 1.0 / static_cast<double>(feat_a.size());
    double acc = 0.0;
    d_norm.assign(feat_a.size(), 0.0);
    for (std::size_t i = 0; i < na.size(); ++i) {
      const double d = na[i] - nb[i];
      acc += d * d;
      d_norm[i] = wl * 2.0 * d * scale;
    }
    value += wl * acc * scale;
    normalize_backward(feat_a, d_norm, f, hw, d_feat);
    auto& d_post = layer == 0 ? d_post1 : d_post2;
    for (std::size_t i = 0; i < d_feat.size(); ++i) d_post[i] += d_feat[i];
  }
  lv.value = value;

  // backward through the a-branch stack
  std::vector<double> d_pre2(fa.pre2.size());
  for (std::size_t i = 0; i < d_pre2.size(); ++i) {
    d_pre2[i] = d_post2[i] * silu_derivative(fa.pre2[i]);
  }
  std::vector<double> d_from2(fa.post1.size(), 0.0);
  detail::conv3_backward(fa.post1.data(), sw.w2.data(), d_pre2.data(), d_from2.data(), nullptr,
                         nullptr, f, f, h, w);
  std::vector<double> d_pre1(fa.pre1.size());
  for (std::size_t i = 0; i < d_pre1.size(); ++i) {
    d_pre1[i] = (d_post1[i] + d_from2[i]) * silu_derivative(fa.pre1[i]);
  }
  detail::conv3_backward(x0_hat.data(), sw.w1.data(), d_pre1.data(), lv.d_pred.data(), nullptr,
                         nullptr, spec.data_channels, f, h, w);
  return lv;
}

LossValue total_loss(const Tensor& x0_hat, const Tensor& x0, int t, const ObjectiveSpec& spec,
                     const Schedule& s) {
  if (spec.lambda < 0.0) throw std::invalid_argument("total_loss: lambda must be >= 0");
  LossValue lv = data_loss(x0_hat, x0, t, spec, s);
  if (spec.lambda > 0.0) {
    if (!spec.perceptual.has_value()) {
      throw std::invalid_argument("total_loss: lambda > 0 requires a perceptual spec");
    }
    const LossValue pv = perceptual_loss(x0_hat, x0, *spec.perceptual);
    lv.value += spec.lambda * pv.value;
    for (std::size_t i = 0; i < lv.d_pred.size(); ++i) {
      lv.d_pred[i] += spec.lambda * pv.d_pred[i];
    }
  }
  return lv;
}

}  // namespace resshift
