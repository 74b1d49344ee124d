#pragma once

// Dense float32 kernels over Tensor3. Every reduction runs in a fixed order
// (bias first, then ascending input index) so repeated calls are bit-identical.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "falo/error.hpp"
#include "falo/flops.hpp"
#include "falo/tensor.hpp"

namespace falo {

// y = x * weight + bias, weight stored row-major [in_dim, out_dim].
struct LinearParams {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<float> weight;
  std::vector<float> bias;

  void check() const {
    if (weight.size() != in_dim * out_dim || bias.size() != out_dim) {
      throw ShapeError("LinearParams: expected weight " + std::to_string(in_dim) + "x" +
                       std::to_string(out_dim) + " and bias " + std::to_string(out_dim));
    }
  }
};

// Per-channel 1D kernel, weight stored row-major [channels, taps].
struct DepthwiseParams {
  std::size_t channels = 0;
  std::size_t taps = 0;
  std::vector<float> weight;
  std::vector<float> bias;

  void check() const {
    if (taps % 2 == 0) throw ShapeError("DepthwiseParams: kernel size must be odd, got " +
                                        std::to_string(taps));
    if (weight.size() != channels * taps || bias.size() != channels) {
      throw ShapeError("DepthwiseParams: expected weight " + std::to_string(channels) + "x" +
                       std::to_string(taps) + " and bias " + std::to_string(channels));
    }
  }
};

struct NormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
};

inline constexpr float kLayerNormEps = 1e-5f;

inline Tensor3 linear(const Tensor3& x, const LinearParams& p) {
  p.check();
  if (x.channels() != p.in_dim) {
    throw ShapeError("linear: input has " + std::to_string(x.channels()) +
                     " channels, weight expects " + std::to_string(p.in_dim));
  }
  Tensor3 y(x.batch(), x.tokens(), p.out_dim);
  const std::size_t rows = x.batch() * x.tokens();
  const std::size_t in = p.in_dim;
  const std::size_t out = p.out_dim;
  if (out == 0) return y;
  const float* w = p.weight.data();
  const float* bias = p.bias.data();
  const float* xs = x.data();
  float* ys = y.values().data();

  // Four rows share each weight row load; per-element accumulation order is
  // unchanged (bias, then k = 0..in-1).
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    const float* x0 = xs + i * in;
    const float* x1 = x0 + in;
    const float* x2 = x1 + in;
    const float* x3 = x2 + in;
    float* y0 = ys + i * out;
    float* y1 = y0 + out;
    float* y2 = y1 + out;
    float* y3 = y2 + out;
    for (std::size_t j = 0; j < out; ++j) {
      y0[j] = bias[j];
      y1[j] = bias[j];
      y2[j] = bias[j];
      y3[j] = bias[j];
    }
    for (std::size_t k = 0; k < in; ++k) {
      const float* wr = w + k * out;
      const float a0 = x0[k], a1 = x1[k], a2 = x2[k], a3 = x3[k];
      for (std::size_t j = 0; j < out; ++j) {
        const float wv = wr[j];
        y0[j] += a0 * wv;
        y1[j] += a1 * wv;
        y2[j] += a2 * wv;
        y3[j] += a3 * wv;
      }
    }
  }
  for (; i < rows; ++i) {
    const float* xr = xs + i * in;
    float* yr = ys + i * out;
    for (std::size_t j = 0; j < out; ++j) yr[j] = bias[j];
    for (std::size_t k = 0; k < in; ++k) {
      const float* wr = w + k * out;
      const float a = xr[k];
      for (std::size_t j = 0; j < out; ++j) yr[j] += a * wr[j];
    }
  }
  return y;
}

// Same-length zero-padded depthwise convolution along the token axis:
//   y[b,t,c] = bias[c] + sum_{j=-r..r} x[b,t+j,c] * k[c, j+r],  r = (K-1)/2.
// Rows of different batch index never interact.
inline Tensor3 dwconv1d(const Tensor3& x, const DepthwiseParams& p) {
  p.check();
  if (x.channels() != p.channels) {
    throw ShapeError("dwconv1d: input has " + std::to_string(x.channels()) +
                     " channels, kernel expects " + std::to_string(p.channels));
  }
  const std::size_t C = p.channels;
  const std::size_t K = p.taps;
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(K / 2);
  const std::ptrdiff_t T = static_cast<std::ptrdiff_t>(x.tokens());

  std::vector<float> taps_major(K * C);  // [K, C]
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t j = 0; j < K; ++j) taps_major[j * C + c] = p.weight[c * K + j];

  Tensor3 y(x.batch(), x.tokens(), C);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::ptrdiff_t t = 0; t < T; ++t) {
      float* yr = y.row(b, static_cast<std::size_t>(t)).data();
      for (std::size_t c = 0; c < C; ++c) yr[c] = p.bias[c];
      for (std::ptrdiff_t j = -r; j <= r; ++j) {
        const std::ptrdiff_t s = t + j;
        if (s < 0 || s >= T) continue;
        const float* xr = x.row(b, static_cast<std::size_t>(s)).data();
        const float* kr = taps_major.data() + static_cast<std::size_t>(j + r) * C;
        for (std::size_t c = 0; c < C; ++c) yr[c] += xr[c] * kr[c];
      }
    }
  }
  return y;
}

// Per-token normalization over channels with population variance; statistics
// are accumulated in double so a constant row maps exactly to beta.
inline Tensor3 layer_norm(const Tensor3& x, const NormParams& p, float eps = kLayerNormEps) {
  const std::size_t C = x.channels();
  if (C == 0 || p.gamma.size() != C || p.beta.size() != C) {
    throw ShapeError("layer_norm: expected gamma/beta of length " + std::to_string(C));
  }
  Tensor3 y(x.batch(), x.tokens(), C);
  const std::size_t rows = x.batch() * x.tokens();
  for (std::size_t i = 0; i < rows; ++i) {
    const auto xr = x.flat_row(i);
    auto yr = y.flat_row(i);
    double sum = 0.0;
    for (float v : xr) sum += v;
    const double mean = sum / static_cast<double>(C);
    double sq = 0.0;
    for (float v : xr) {
      const double d = v - mean;
      sq += d * d;
    }
    const double inv_std = 1.0 / std::sqrt(sq / static_cast<double>(C) + eps);
    for (std::size_t c = 0; c < C; ++c) {
      yr[c] = static_cast<float>((xr[c] - mean) * inv_std * p.gamma[c] + p.beta[c]);
    }
  }
  return y;
}

inline Tensor3 hadamard(const Tensor3& a, const Tensor3& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("hadamard: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()));
  }
  Tensor3 y(a.batch(), a.tokens(), a.channels());
  const auto av = a.values();
  const auto bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] * bv[i];
  return y;
}

// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
inline float gelu(float x) noexcept {
  constexpr float kSqrt2OverPi = 0.7978845608028654f;
  constexpr float kCubic = 0.044715f;
  return 0.5f * x * (1.0f + std::tanh(kSqrt2OverPi * (x + kCubic * x * x * x)));
}

inline void gelu_inplace(std::span<float> v) noexcept {
  for (float& e : v) e = gelu(e);
}

inline Tensor3 gelu(Tensor3 x) {
  gelu_inplace(x.values());
  return x;
}

// acc += delta, elementwise.
inline void add_inplace(Tensor3& acc, const Tensor3& delta) {
  if (acc.shape() != delta.shape()) {
    throw ShapeError("add: shapes " + to_string(acc.shape()) + " and " +
                     to_string(delta.shape()));
  }
  auto a = acc.values();
  const auto d = delta.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += d[i];
}

inline float sigmoid(float x) noexcept { return 1.0f / (1.0f + std::exp(-x)); }

}  // namespace falo
