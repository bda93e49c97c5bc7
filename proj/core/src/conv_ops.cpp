#include "conv_ops.hpp"

#include <cstring>

namespace resshift::detail {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

void dense_forward(const double* in, const double* wgt, const double* bias, double* out,
                   int in_ch, int out_ch, int hw) {
  for (int oc = 0; oc < out_ch; ++oc) {
    double* o = out + static_cast<std::size_t>(oc) * hw;
    const double b = bias[oc];
    for (int p = 0; p < hw; ++p) o[p] = b;
    const double* wrow = wgt + static_cast<std::size_t>(oc) * in_ch;
    for (int ic = 0; ic < in_ch; ++ic) {
      const double wv = wrow[ic];
      if (wv == 0.0) continue;
      const double* x = in + static_cast<std::size_t>(ic) * hw;
      for (int p = 0; p < hw; ++p) o[p] += wv * x[p];
    }
  }
}

void dense_backward(const double* in, const double* wgt, const double* d_out, double* d_in,
                    double* d_wgt, double* d_bias, int in_ch, int out_ch, int hw) {
  if (d_in) {
    std::memset(d_in, 0, sizeof(double) * static_cast<std::size_t>(in_ch) * hw);
  }
  for (int oc = 0; oc < out_ch; ++oc) {
    const double* go = d_out + static_cast<std::size_t>(oc) * hw;
    if (d_bias) {
      double acc = 0.0;
      for (int p = 0; p < hw; ++p) acc += go[p];
      d_bias[oc] += acc;
    }
    const double* wrow = wgt + static_cast<std::size_t>(oc) * in_ch;
    for (int ic = 0; ic < in_ch; ++ic) {
      const double* x = in + static_cast<std::size_t>(ic) * hw;
      if (d_wgt) {
        double acc = 0.0;
        for (int p = 0; p < hw; ++p) acc += go[p] * x[p];
        d_wgt[oc * in_ch + ic] += acc;
      }
      if (d_in) {
        double* gi = d_in + static_cast<std::size_t>(ic) * hw;
        const double wv = wrow[ic];
        for (int p = 0; p < hw; ++p) gi[p] += wv * go[p];
      }
    }
  }
}

void conv3_forward(const double* in, const double* wgt, const double* bias, double* out,
                   int in_ch, int out_ch, int h, int w) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int oc = 0; oc < out_ch; ++oc) {
    double* o = out + oc * plane;
    const double b = bias[oc];
    for (std::size_t p = 0; p < plane; ++p) o[p] = b;
    for (int ic = 0; ic < in_ch; ++ic) {
      const double* x = in + ic * plane;
      const double* k = wgt + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
      for (int kh = -1; kh <= 1; ++kh) {
        for (int kw = -1; kw <= 1; ++kw) {
          const double wv = k[(kh + 1) * 3 + (kw + 1)];
          // interior rows/cols never reflect for a +-1 shift
          for (int r = 1; r + 1 < h; ++r) {
            const double* src = x + static_cast<std::size_t>(r + kh) * w + kw;
            double* dst = o + static_cast<std::size_t>(r) * w;
            for (int c = 1; c + 1 < w; ++c) dst[c] += wv * src[c];
          }
        }
      }
      // border frame with reflected taps
      for (int r = 0; r < h; ++r) {
        const bool border_row = (r == 0 || r == h - 1);
        for (int c = 0; c < w; ++c) {
          if (!border_row && c != 0 && c != w - 1) {
            c = w - 2;  // skip interior span of this row
            continue;
          }
          double acc = 0.0;
          for (int kh = -1; kh <= 1; ++kh) {
            const int rr = reflect_index(r + kh, h);
            for (int kw = -1; kw <= 1; ++kw) {
              const int cc = reflect_index(c + kw, w);
              acc += k[(kh + 1) * 3 + (kw + 1)] * x[static_cast<std::size_t>(rr) * w + cc];
            }
          }
          o[static_cast<std::size_t>(r) * w + c] += acc;
        }
      }
    }
  }
}

void conv3_backward(const double* in, const double* wgt, const double* d_out, double* d_in,
                    double* d_wgt, double* d_bias, int in_ch, int out_ch, int h, int w) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  if (d_in) {
    std::memset(d_in, 0, sizeof(double) * in_ch * plane);
  }
  for (int oc = 0; oc < out_ch; ++oc) {
    const double* go = d_out + oc * plane;
    if (d_bias) {
      double acc = 0.0;
      for (std::size_t p = 0; p < plane; ++p) acc += go[p];
      d_bias[oc] += acc;
    }
    for (int ic = 0; ic < in_ch; ++ic) {
      const double* x = in + ic * plane;
      double* gi = d_in ? d_in + ic * plane : nullptr;
      const std::size_t koff = (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
      const double* k = wgt + koff;
      for (int kh = -1; kh <= 1; ++kh) {
        for (int kw = -1; kw <= 1; ++kw) {
          const int ki = (kh + 1) * 3 + (kw + 1);
          const double wv = k[ki];
          double wacc = 0.0;
          // interior
          for (int r = 1; r + 1 < h; ++r) {
            const double* grow = go + static_cast<std::size_t>(r) * w;
            const double* xrow = x + static_cast<std::size_t>(r + kh) * w + kw;
            if (d_wgt) {
              for (int c = 1; c + 1 < w; ++c) wacc += grow[c] * xrow[c];
            }
            if (gi) {
              double* girow = gi + static_cast<std::size_t>(r + kh) * w + kw;
              for (int c = 1; c + 1 < w; ++c) girow[c] += wv * grow[c];
            }
          }
          // border frame
          for (int r = 0; r < h; ++r) {
            const bool border_row = (r == 0 || r == h - 1);
            for (int c = 0; c < w; ++c) {
              if (!border_row && c != 0 && c != w - 1) {
                c = w - 2;
                continue;
              }
              const int rr = reflect_index(r + kh, h);
              const int cc = reflect_index(c + kw, w);
              const double g = go[static_cast<std::size_t>(r) * w + c];
              if (d_wgt) wacc += g * x[static_cast<std::size_t>(rr) * w + cc];
              if (gi) gi[static_cast<std::size_t>(rr) * w + cc] += wv * g;
            }
          }
          if (d_wgt) d_wgt[koff + ki] += wacc;
        }
      }
    }
  }
}

void depthwise_conv_reflect(const double* in, int channels, int h, int w, const double* kernel,
                            int ksize, double* out) {
  const int half = ksize / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int ch = 0; ch < channels; ++ch) {
    const double* x = in + ch * plane;
    double* o = out + ch * plane;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int kh = -half; kh <= half; ++kh) {
          const int rr = reflect_index(r + kh, h);
          const double* krow = kernel + static_cast<std::size_t>(kh + half) * ksize;
          const double* xrow = x + static_cast<std::size_t>(rr) * w;
          for (int kw = -half; kw <= half; ++kw) {
            acc += krow[kw + half] * xrow[reflect_index(c + kw, w)];
          }
        }
        o[static_cast<std::size_t>(r) * w + c] = acc;
      }
    }
  }
}

}  // namespace resshift::detail
