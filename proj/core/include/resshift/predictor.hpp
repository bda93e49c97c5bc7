#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "resshift/objective.hpp"
#include "resshift/rng.hpp"
#include "resshift/schedule.hpp"
#include "resshift/tensor.hpp"

namespace resshift {

enum class Activation { None, Silu };
enum class LayerKind { Dense, Conv3x3 };  // Dense acts per pixel across channels

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int in_channels = 0;
  int out_channels = 0;
  Activation act = Activation::None;

  std::size_t weight_count() const;
  std::size_t param_count() const;  // weights + bias
};

// Ordered layer descriptors of the predictor network. The network input is
// the channel concatenation [x_t, y0, embed(t)]; with identity_skip the
// output of the last layer is added onto x_t, so an all-zero parameter
// vector gives f(x_t, y0, t) == x_t.
struct PredictorLayout {
  std::vector<LayerSpec> layers;
  int data_channels = 1;
  int t_embed_dim = 32;
  bool identity_skip = true;

  int input_channels() const { return 2 * data_channels + t_embed_dim; }
  std::size_t param_count() const;
  void validate() const;

  // concat -> dense(in->hidden)+silu -> conv3(hidden->hidden)+silu
  //        -> conv3(hidden->hidden)+silu -> dense(hidden->C) head, plus skip
  static PredictorLayout reference(int data_channels, int hidden = 16, int t_embed_dim = 32);
};

struct PredictorParams {
  PredictorLayout layout;
  std::vector<double> theta;

  static PredictorParams zeros(const PredictorLayout& layout);
  // He-style init on hidden layers; the output head stays zero so the
  // network starts as the identity on x_t.
  static PredictorParams initialized(const PredictorLayout& layout, Prng& rng);
};

struct Gradient {
  std::vector<double> d_theta;
};

// Sinusoidal geometric-frequency embedding of the integer timestep.
std::vector<double> timestep_embedding(int t, int dim);

Tensor predict(const PredictorParams& params, const Tensor& x_t, const Tensor& y0, int t,
               const Schedule& s);

struct TrainSample {
  Tensor x_t;
  Tensor y0;
  int t = 1;
  Tensor x0;
};

// Raised when a batch element produces a non-finite loss.
struct NonFiniteLossError : std::runtime_error {
  explicit NonFiniteLossError(int index, const std::string& msg)
      : std::runtime_error(msg), batch_index(index) {}
  int batch_index;
};

// Mean loss over the batch and the exact gradient of that mean w.r.t.
// theta, accumulated in fixed batch order. Honors RESSHIFT_THREADS for
// batch-element fan-out (per-element buffers, deterministic reduction).
std::pair<double, Gradient> loss_and_gradient(const PredictorParams& params,
                                              const std::vector<TrainSample>& batch,
                                              const ObjectiveSpec& objective, const Schedule& s);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  static AdamState for_params(const PredictorParams& p);
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update with bias correction. Returns false (and leaves both
// params and state untouched) when the gradient is non-finite.
bool adam_step(PredictorParams& params, const Gradient& grad, AdamState& state, double lr,
               const AdamConfig& cfg = {});

// Annealing cosine: lr(0) == lr_max, lr(total-1) == lr_min.
double cosine_lr(long iter, long total_iters, double lr_max, double lr_min);

// Checkpoint file: magic "RSHIFT01", versioned length-prefixed layout
// descriptor, little-endian float64 theta, then optimizer moments.
void save_checkpoint(const std::string& path, const PredictorParams& params,
                     const AdamState& opt);
struct Checkpoint {
  PredictorParams params;
  AdamState opt;
};
Checkpoint load_checkpoint(const std::string& path);

// Worker count from RESSHIFT_THREADS (0 or unset = auto).
int worker_count();

}  // namespace resshift
