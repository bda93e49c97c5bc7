#pragma once

// Internal dense / 3x3 convolution primitives with reflect-101 padding.
// Weight layout is [out][in][kh][kw] followed by bias [out]; maps are
// channel-major (c, h, w) contiguous doubles.

#include <cstddef>

namespace resshift::detail {

// reflect-101: -1 -> 1, n -> n-2
int reflect_index(int i, int n);

void dense_forward(const double* in, const double* wgt, const double* bias, double* out,
                   int in_ch, int out_ch, int hw);
void dense_backward(const double* in, const double* wgt, const double* d_out, double* d_in,
                    double* d_wgt, double* d_bias, int in_ch, int out_ch, int hw);

void conv3_forward(const double* in, const double* wgt, const double* bias, double* out,
                   int in_ch, int out_ch, int h, int w);
// d_in may be null when the input gradient is not needed; d_wgt/d_bias may
// be null for frozen weights.
void conv3_backward(const double* in, const double* wgt, const double* d_out, double* d_in,
                    double* d_wgt, double* d_bias, int in_ch, int out_ch, int h, int w);

// Single odd-sized kernel applied to every channel independently.
void depthwise_conv_reflect(const double* in, int channels, int h, int w, const double* kernel,
                            int ksize, double* out);

}  // namespace resshift::detail
