#include "resshift/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "conv_ops.hpp"

namespace resshift {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInpaintFill = 0.5;

void require_image(const Tensor& x, const char* where) {
  if (x.ndim() != 3) {
    throw std::invalid_argument(std::string(where) + ": expected (c,h,w) tensor, got " +
                                x.shape_str());
  }
}

}  // namespace

void validate_degradation_spec(const DegradationSpec& spec) {
  if (spec.blur.iso_prob < 0.0 || spec.blur.iso_prob > 1.0) {
    throw std::invalid_argument("DegradationSpec: blur iso_prob must be in [0,1]");
  }
  if (spec.blur.window < 1 || spec.blur.window % 2 == 0) {
    throw std::invalid_argument("DegradationSpec: blur window must be odd and positive");
  }
  if (!(spec.blur.width_min > 0.0) || spec.blur.width_max < spec.blur.width_min) {
    throw std::invalid_argument("DegradationSpec: blur widths must satisfy 0 < min <= max");
  }
  if (spec.scale < 1) throw std::invalid_argument("DegradationSpec: scale must be >= 1");
  if (spec.kind == DegradationKind::SuperRes && spec.resample.empty()) {
    throw std::invalid_argument("DegradationSpec: resample set must not be empty");
  }
  if (spec.noise.gaussian_prob < 0.0 || spec.noise.gaussian_prob > 1.0) {
    throw std::invalid_argument("DegradationSpec: noise gaussian_prob must be in [0,1]");
  }
}

Tensor sample_blur_kernel(const BlurSpec& spec, Prng& rng) {
  const bool iso = rng.uniform() < spec.iso_prob;
  double sx, sy;
  if (iso) {
    sx = sy = rng.uniform_in(spec.width_min, spec.width_max);
  } else {
    sx = rng.uniform_in(spec.width_min, spec.width_max);
    sy = rng.uniform_in(spec.width_min, spec.width_max);
  }
  const int n = spec.window;
  const int half = n / 2;
  Tensor k({n, n});
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dy = i - half;
    for (int j = 0; j < n; ++j) {
      const double dx = j - half;
      const double v = std::exp(-(dx * dx / (2.0 * sx * sx) + dy * dy / (2.0 * sy * sy)));
      k[static_cast<std::size_t>(i) * n + j] = v;
      sum += v;
    }
  }
  for (std::size_t i = 0; i < k.size(); ++i) k[i] /= sum;
  return k;
}

Tensor add_noise(const Tensor& x, const NoiseSpec& spec, Prng& rng) {
  Tensor out = x;
  const bool gaussian = rng.uniform() < spec.gaussian_prob;
  if (gaussian) {
    const double level = rng.uniform_in(spec.gaussian_level_min, spec.gaussian_level_max);
    const double sd = level / 255.0;
    if (sd > 0.0) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += sd * rng.normal();
    }
  } else {
    const double scale = rng.uniform_in(spec.poisson_scale_min, spec.poisson_scale_max);
    const double gain = scale / 255.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<double>(rng.poisson(out[i] / gain)) * gain;
    }
  }
  out.clamp(0.0, 1.0);
  return out;
}

Tensor downsample(const Tensor& x, int scale, ResampleMode mode) {
  require_image(x, "downsample");
  if (scale == 1) return x;
  const int c = x.channels(), h = x.height(), w = x.width();
  if (h % scale != 0 || w % scale != 0) {
    throw std::invalid_argument("downsample: dims " + x.shape_str() +
                                " not divisible by scale " + std::to_string(scale));
  }
  const int oh = h / scale, ow = w / scale;
  Tensor out({c, oh, ow});
  switch (mode) {
    case ResampleMode::Nearest:
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < oh; ++i)
          for (int j = 0; j < ow; ++j) out.at(ch, i, j) = x.at(ch, i * scale, j * scale);
      break;
    case ResampleMode::Area:
      for (int ch = 0; ch < c; ++ch) {
        for (int i = 0; i < oh; ++i) {
          for (int j = 0; j < ow; ++j) {
            double acc = 0.0;
            for (int di = 0; di < scale; ++di)
              for (int dj = 0; dj < scale; ++dj) acc += x.at(ch, i * scale + di, j * scale + dj);
            out.at(ch, i, j) = acc / (scale * scale);
          }
        }
      }
      break;
    case ResampleMode::Bilinear:
      for (int ch = 0; ch < c; ++ch) {
        for (int i = 0; i < oh; ++i) {
          const double sy = (i + 0.5) * scale - 0.5;
          const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h - 1);
          const int y1 = std::min(y0 + 1, h - 1);
          const double fy = sy - std::floor(sy);
          for (int j = 0; j < ow; ++j) {
            const double sx = (j + 0.5) * scale - 0.5;
            const int x0i = std::clamp(static_cast<int>(std::floor(sx)), 0, w - 1);
            const int x1i = std::min(x0i + 1, w - 1);
            const double fx = sx - std::floor(sx);
            out.at(ch, i, j) = (1 - fy) * ((1 - fx) * x.at(ch, y0, x0i) + fx * x.at(ch, y0, x1i)) +
                               fy * ((1 - fx) * x.at(ch, y1, x0i) + fx * x.at(ch, y1, x1i));
          }
        }
      }
      break;
  }
  return out;
}

Tensor upsample_nearest(const Tensor& x, int scale) {
  require_image(x, "upsample_nearest");
  if (scale == 1) return x;
  const int c = x.channels(), h = x.height(), w = x.width();
  Tensor out({c, h * scale, w * scale});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h * scale; ++i)
      for (int j = 0; j < w * scale; ++j) out.at(ch, i, j) = x.at(ch, i / scale, j / scale);
  return out;
}

Tensor degrade_superres(const Tensor& x0, const DegradationSpec& spec, Prng& rng) {
  require_image(x0, "degrade_superres");
  validate_degradation_spec(spec);
  const int h = x0.height(), w = x0.width();
  if (h % spec.scale != 0 || w % spec.scale != 0) {
    throw std::invalid_argument("degrade_superres: dims " + x0.shape_str() +
                                " not divisible by scale " + std::to_string(spec.scale));
  }
  const Tensor kernel = sample_blur_kernel(spec.blur, rng);
  Tensor blurred(x0.shape());
  detail::depthwise_conv_reflect(x0.data(), x0.channels(), h, w, kernel.data(), spec.blur.window,
                                 blurred.data());
  const ResampleMode mode = spec.resample[rng.uniform_index(spec.resample.size())];
  Tensor lq = downsample(blurred, spec.scale, mode);
  lq = add_noise(lq, spec.noise, rng);
  return upsample_nearest(lq, spec.scale);
}

namespace {

void stamp_disc(Tensor& mask, double cy, double cx, double radius) {
  const int h = mask.height(), w = mask.width();
  const int r0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int r1 = std::min(h - 1, static_cast<int>(std::ceil(cy + radius)));
  const int c0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int c1 = std::min(w - 1, static_cast<int>(std::ceil(cx + radius)));
  const double r2 = radius * radius;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double dy = r - cy, dx = c - cx;
      if (dy * dy + dx * dx <= r2) mask.at(0, r, c) = 1.0;
    }
  }
}

}  // namespace

Tensor make_mask(const MaskSpec& spec, int height, int width, Prng& rng) {
  if (height < 1 || width < 1) throw std::invalid_argument("make_mask: empty image");
  if (spec.stroke_count_max < spec.stroke_count_min || spec.stroke_count_min < 1) {
    throw std::invalid_argument("make_mask: stroke counts must satisfy 1 <= min <= max");
  }
  if (spec.stroke_width_max < spec.stroke_width_min || !(spec.stroke_width_min > 0.0)) {
    throw std::invalid_argument("make_mask: stroke widths must satisfy 0 < min <= max");
  }
  if (!(spec.box_area_fraction > 0.0) || spec.box_area_fraction > 1.0) {
    throw std::invalid_argument("make_mask: box_area_fraction must be in (0,1]");
  }
  if (spec.expand_border_fraction < 0.0 || spec.expand_border_fraction >= 0.5) {
    throw std::invalid_argument("make_mask: expand_border_fraction must be in [0,0.5)");
  }
  Tensor mask({1, height, width});
  switch (spec.type) {
    case MaskType::Box: {
      const double area = spec.box_area_fraction * height * width;
      const double aspect = rng.uniform_in(0.5, 2.0);
      const int bh = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, height);
      const int bw = std::clamp(static_cast<int>(std::lround(std::sqrt(area / aspect))), 1, width);
      const int top = static_cast<int>(rng.uniform_index(height - bh + 1));
      const int left = static_cast<int>(rng.uniform_index(width - bw + 1));
      for (int r = top; r < top + bh; ++r)
        for (int c = left; c < left + bw; ++c) mask.at(0, r, c) = 1.0;
      break;
    }
    case MaskType::Irregular: {
      const int count = spec.stroke_count_min +
                        static_cast<int>(rng.uniform_index(
                            spec.stroke_count_max - spec.stroke_count_min + 1));
      const double px_scale = height / 32.0;
      for (int k = 0; k < count; ++k) {
        const double width_px = std::max(
            1.0, rng.uniform_in(spec.stroke_width_min, spec.stroke_width_max) * px_scale);
        double r = rng.uniform_in(0, height - 1);
        double c = rng.uniform_in(0, width - 1);
        double angle = rng.uniform_in(0, 2 * kPi);
        const int steps = static_cast<int>(rng.uniform_in(0.75 * height, 1.5 * height));
        for (int st = 0; st < steps; ++st) {
          stamp_disc(mask, r, c, width_px / 2.0);
          angle += rng.uniform_in(-0.5, 0.5);
          r += std::sin(angle);
          c += std::cos(angle);
          if (r < 0 || r > height - 1 || c < 0 || c > width - 1) {
            r = std::clamp(r, 0.0, height - 1.0);
            c = std::clamp(c, 0.0, width - 1.0);
            angle += kPi / 2;
          }
        }
      }
      break;
    }
    case MaskType::Half: {
      HalfSide side = spec.half_side;
      if (side == HalfSide::Random) {
        side = static_cast<HalfSide>(1 + rng.uniform_index(4));
      }
      const int hh = height / 2, hw = width / 2;
      for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
          const bool masked = (side == HalfSide::Left && c < hw) ||
                              (side == HalfSide::Right && c >= width - hw) ||
                              (side == HalfSide::Top && r < hh) ||
                              (side == HalfSide::Bottom && r >= height - hh);
          if (masked) mask.at(0, r, c) = 1.0;
        }
      }
      break;
    }
    case MaskType::Expand: {
      const int mr = static_cast<int>(std::lround(spec.expand_border_fraction * height));
      const int mc = static_cast<int>(std::lround(spec.expand_border_fraction * width));
      for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
          if (r < mr || r >= height - mr || c < mc || c >= width - mc) mask.at(0, r, c) = 1.0;
        }
      }
      break;
    }
  }
  return mask;
}

InpaintResult degrade_inpaint(const Tensor& x0, const Tensor& mask) {
  require_image(x0, "degrade_inpaint");
  require_image(mask, "degrade_inpaint");
  if (mask.channels() != 1 || mask.height() != x0.height() || mask.width() != x0.width()) {
    throw std::invalid_argument("degrade_inpaint: mask " + mask.shape_str() +
                                " does not match image " + x0.shape_str());
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0.0 && mask[i] != 1.0) {
      throw std::invalid_argument("degrade_inpaint: mask must be binary");
    }
  }
  InpaintResult res;
  res.mask = mask;
  res.y = x0;
  for (int ch = 0; ch < x0.channels(); ++ch) {
    for (int r = 0; r < x0.height(); ++r) {
      for (int c = 0; c < x0.width(); ++c) {
        const double m = mask.at(0, r, c);
        if (m == 1.0) res.y.at(ch, r, c) = kInpaintFill;
      }
    }
  }
  return res;
}

Tensor degrade(const Tensor& x0, const DegradationSpec& spec, Prng& rng) {
  validate_degradation_spec(spec);
  switch (spec.kind) {
    case DegradationKind::Identity:
      return x0;
    case DegradationKind::SuperRes:
      return degrade_superres(x0, spec, rng);
    case DegradationKind::Inpaint: {
      require_image(x0, "degrade");
      const Tensor mask = make_mask(spec.mask, x0.height(), x0.width(), rng);
      return degrade_inpaint(x0, mask).y;
    }
  }
  throw std::logic_error("degrade: unreachable");
}

Tensor make_toy_image(ToyKind kind, int channels, int height, int width, Prng& rng) {
  if (kind == ToyKind::Mixed) {
    kind = static_cast<ToyKind>(rng.uniform_index(3));
  }
  Tensor img({channels, height, width});
  switch (kind) {
    case ToyKind::Blobs: {
      const double bg = rng.uniform_in(0.05, 0.25);
      for (std::size_t i = 0; i < img.size(); ++i) img[i] = bg;
      const int nblobs = 1 + static_cast<int>(rng.uniform_index(3));
      for (int b = 0; b < nblobs; ++b) {
        const double cy = rng.uniform_in(0, height - 1);
        const double cx = rng.uniform_in(0, width - 1);
        const double sigma = rng.uniform_in(height / 16.0, height / 5.0);
        const double amp = rng.uniform_in(0.3, 0.75);
        for (int ch = 0; ch < channels; ++ch) {
          const double amp_c = channels == 1 ? amp : amp * rng.uniform_in(0.7, 1.0);
          for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
              const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
              img.at(ch, r, c) += amp_c * std::exp(-d2 / (2.0 * sigma * sigma));
            }
          }
        }
      }
      break;
    }
    case ToyKind::Stripes: {
      const double freq = rng.uniform_in(0.04, 0.15);
      const double angle = rng.uniform_in(0, kPi);
      const double phase = rng.uniform_in(0, 2 * kPi);
      const double fy = std::sin(angle) * freq, fx = std::cos(angle) * freq;
      for (int ch = 0; ch < channels; ++ch) {
        for (int r = 0; r < height; ++r) {
          for (int c = 0; c < width; ++c) {
            img.at(ch, r, c) = 0.5 + 0.4 * std::sin(2 * kPi * (fy * r + fx * c) + phase);
          }
        }
      }
      break;
    }
    case ToyKind::Checker: {
      const int cell = rng.uniform() < 0.5 ? 4 : 8;
      const int orow = static_cast<int>(rng.uniform_index(cell));
      const int ocol = static_cast<int>(rng.uniform_index(cell));
      const double lo = rng.uniform_in(0.05, 0.4);
      const double hi = rng.uniform_in(0.6, 0.95);
      for (int ch = 0; ch < channels; ++ch) {
        for (int r = 0; r < height; ++r) {
          for (int c = 0; c < width; ++c) {
            const bool odd = (((r + orow) / cell) + ((c + ocol) / cell)) % 2 == 1;
            img.at(ch, r, c) = odd ? hi : lo;
          }
        }
      }
      break;
    }
    case ToyKind::Mixed:
      break;  // resolved above
  }
  img.clamp(0.0, 1.0);
  return img;
}

std::vector<Tensor> make_toy_dataset(ToyKind kind, int count, int channels, int size,
                                     std::uint64_t seed) {
  std::vector<Tensor> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Prng rng = make_prng(seed, Stream::Dataset, static_cast<std::uint64_t>(i));
    out.push_back(make_toy_image(kind, channels, size, size, rng));
  }
  return out;
}

Tensor make_point_cloud(int count, Prng& rng) {
  Tensor pts({count, 2});
  for (int i = 0; i < count; ++i) {
    const double angle = rng.uniform_in(0, 2 * kPi);
    const double radius = 0.35 + 0.03 * rng.normal();
    pts[static_cast<std::size_t>(i) * 2] = 0.5 + radius * std::cos(angle);
    pts[static_cast<std::size_t>(i) * 2 + 1] = 0.5 + radius * std::sin(angle);
  }
  return pts;
}

}  // namespace resshift
