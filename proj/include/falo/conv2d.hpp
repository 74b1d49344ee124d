#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "falo/error.hpp"
#include "falo/tensor.hpp"

namespace falo {

// Square 2D convolution, weight stored [k, k, in, out] (HWIO).
struct Conv2dParams {
  std::size_t kernel = 3;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<float> weight;
  std::vector<float> bias;

  void check() const {
    if (kernel % 2 == 0) throw ShapeError("Conv2dParams: kernel size must be odd");
    if (weight.size() != kernel * kernel * in_channels * out_channels ||
        bias.size() != out_channels) {
      throw ShapeError("Conv2dParams: expected " + std::to_string(kernel) + "x" +
                       std::to_string(kernel) + "x" + std::to_string(in_channels) + "x" +
                       std::to_string(out_channels) + " weight");
    }
  }
};

inline std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride) {
  const std::size_t pad = kernel / 2;
  return (in + 2 * pad - kernel) / stride + 1;
}

// Zero "same" padding of kernel/2. Accumulation order per output: bias, then
// (kh, kw, ci) ascending.
inline BEVGrid conv2d(const BEVGrid& x, const Conv2dParams& p, std::size_t stride = 1) {
  p.check();
  if (x.channels() != p.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(x.channels()) +
                     " channels, weight expects " + std::to_string(p.in_channels));
  }
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  const std::size_t k = p.kernel;
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(x.height());
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(x.width());
  const std::size_t cin = p.in_channels;
  const std::size_t cout = p.out_channels;
  const std::size_t oh = x.height() == 0 ? 0 : conv_output_size(x.height(), k, stride);
  const std::size_t ow = x.width() == 0 ? 0 : conv_output_size(x.width(), k, stride);
  BEVGrid y(oh, ow, cout);
  if (cout == 0) return y;
  const float* w = p.weight.data();
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      float* yr = y.cell(oy, ox).data();
      for (std::size_t co = 0; co < cout; ++co) yr[co] = p.bias[co];
      for (std::size_t kh = 0; kh < k; ++kh) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + kh) - pad;
        if (iy < 0 || iy >= H) continue;
        for (std::size_t kw = 0; kw < k; ++kw) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kw) - pad;
          if (ix < 0 || ix >= W) continue;
          const float* xr =
              x.cell(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)).data();
          const float* wk = w + (kh * k + kw) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const float a = xr[ci];
            const float* wr = wk + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) yr[co] += a * wr[co];
          }
        }
      }
    }
  }
  return y;
}

}  // namespace falo
