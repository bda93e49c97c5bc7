#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "resshift/schedule.hpp"
#include "resshift/tensor.hpp"

namespace resshift {

enum class DataTerm { L2, L1 };

// Stand-in feature-space distance: a fixed randomly-initialized conv stack
// with unit-normalized features. Deterministic given the seed; never trained.
struct PerceptualSpec {
  int data_channels = 1;
  int feature_channels = 6;
  std::uint64_t seed = 0;
  std::vector<double> layer_weights = {0.25, 0.25};  // one weight per stack layer
};

struct ObjectiveSpec {
  DataTerm data_term = DataTerm::L2;
  bool use_elbo_weights = false;  // the default training path never multiplies by w_t
  double lambda = 0.0;
  std::optional<PerceptualSpec> perceptual;
};

// Loss value together with its adjoint w.r.t. the prediction.
struct LossValue {
  double value = 0.0;
  Tensor d_pred;
};

LossValue data_loss(const Tensor& x0_hat, const Tensor& x0, int t, const ObjectiveSpec& spec,
                    const Schedule& s);

LossValue perceptual_loss(const Tensor& x0_hat, const Tensor& x0, const PerceptualSpec& spec);

// data_loss + lambda * perceptual_loss; lambda == 0 is exactly the data term.
LossValue total_loss(const Tensor& x0_hat, const Tensor& x0, int t, const ObjectiveSpec& spec,
                     const Schedule& s);

// Smallest spatial extent the perceptual stack can see (its receptive field).
int perceptual_min_extent();

}  // namespace resshift
