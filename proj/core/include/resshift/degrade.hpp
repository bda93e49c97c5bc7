#pragma once

#include <cstdint>
#include <vector>

#include "resshift/rng.hpp"
#include "resshift/tensor.hpp"

namespace resshift {

enum class DegradationKind { Identity, SuperRes, Inpaint };
enum class ResampleMode { Nearest, Bilinear, Area };
enum class MaskType { Box, Irregular, Half, Expand };
enum class HalfSide { Random, Left, Right, Top, Bottom };

struct BlurSpec {
  double iso_prob = 0.6;  // anisotropic otherwise
  int window = 13;
  double width_min = 0.2;
  double width_max = 0.8;
};

struct NoiseSpec {
  double gaussian_prob = 0.5;  // Poisson otherwise
  double gaussian_level_min = 1.0;
  double gaussian_level_max = 15.0;  // level / 255 is the std
  double poisson_scale_min = 0.05;
  double poisson_scale_max = 0.3;
};

struct MaskSpec {
  MaskType type = MaskType::Box;
  double box_area_fraction = 0.25;
  int stroke_count_min = 1;
  int stroke_count_max = 4;
  double stroke_width_min = 2.0;  // pixels at 32x32; scales with height
  double stroke_width_max = 6.0;
  HalfSide half_side = HalfSide::Random;
  double expand_border_fraction = 0.25;
};

// Declarative description of the LQ-synthesis operator D(.).
struct DegradationSpec {
  DegradationKind kind = DegradationKind::SuperRes;
  BlurSpec blur;
  int scale = 2;
  std::vector<ResampleMode> resample = {ResampleMode::Nearest, ResampleMode::Bilinear,
                                        ResampleMode::Area};
  NoiseSpec noise;
  MaskSpec mask;  // Inpaint only
};

void validate_degradation_spec(const DegradationSpec& spec);

// Discretized (an)isotropic Gaussian on the window grid, unit sum.
Tensor sample_blur_kernel(const BlurSpec& spec, Prng& rng);

// Gaussian: x + (level/255) xi. Poisson: photon counts at rate
// x * 255 / scale, renormalized by scale / 255 (variance proportional to
// intensity). Output clamped to [0, 1].
Tensor add_noise(const Tensor& x, const NoiseSpec& spec, Prng& rng);

// blur -> downsample by scale -> noise -> clamp -> nearest-neighbor
// upsample back to the input shape.
Tensor degrade_superres(const Tensor& x0, const DegradationSpec& spec, Prng& rng);

// Binary (1, h, w) mask, 1 marks masked-out pixels.
Tensor make_mask(const MaskSpec& spec, int height, int width, Prng& rng);

struct InpaintResult {
  Tensor y;     // x0 outside the mask, 0.5 inside
  Tensor mask;  // returned alongside for conditioning
};
InpaintResult degrade_inpaint(const Tensor& x0, const Tensor& mask);

// The D(.) dispatcher of the training loop.
Tensor degrade(const Tensor& x0, const DegradationSpec& spec, Prng& rng);

// resampling building blocks (exposed for tests)
Tensor downsample(const Tensor& x, int scale, ResampleMode mode);
Tensor upsample_nearest(const Tensor& x, int scale);

enum class ToyKind { Blobs, Stripes, Checker, Mixed };

Tensor make_toy_image(ToyKind kind, int channels, int height, int width, Prng& rng);
std::vector<Tensor> make_toy_dataset(ToyKind kind, int count, int channels, int size,
                                     std::uint64_t seed);

// 2-d point cloud (count, 2): a noisy ring centered at (0.5, 0.5) with mean
// radius 0.35 and radial jitter 0.03, for distribution-level checks.
Tensor make_point_cloud(int count, Prng& rng);

}  // namespace resshift
