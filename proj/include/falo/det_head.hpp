#pragma once

// Center-style head: per-class heatmap and an 8-channel box regression
//   (dx, dy, z, log l, log w, log h, sin yaw, cos yaw)
// at every BEV cell, plus a local-maximum decoder.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "falo/conv2d.hpp"
#include "falo/detection.hpp"
#include "falo/error.hpp"
#include "falo/flops.hpp"
#include "falo/kernels.hpp"
#include "falo/tensor.hpp"
#include "falo/voxelizer.hpp"

namespace falo {

inline constexpr std::size_t kRegChannels = 8;
// Log-size outputs are clamped to this magnitude before exp so decoded sizes
// stay finite and strictly positive in float32.
inline constexpr float kMaxLogSize = 10.0f;

struct HeadParams {
  Conv2dParams cls_conv;  // 3x3, C -> hidden
  Conv2dParams cls_out;   // 1x1, hidden -> num_classes
  Conv2dParams reg_conv;  // 3x3, C -> hidden
  Conv2dParams reg_out;   // 1x1, hidden -> 8

  std::size_t num_classes() const noexcept { return cls_out.out_channels; }
};

struct HeadOutput {
  BEVGrid heatmap;  // [H, W, num_classes], sigmoid applied
  BEVGrid reg;      // [H, W, 8]
};

inline HeadOutput head_forward(const BEVGrid& bev, const HeadParams& p) {
  if (p.cls_conv.in_channels != bev.channels() || p.reg_conv.in_channels != bev.channels()) {
    throw ShapeError("head_forward: head expects " + std::to_string(p.cls_conv.in_channels) +
                     " channels, BEV map has " + std::to_string(bev.channels()));
  }
  if (p.reg_out.out_channels != kRegChannels) {
    throw ShapeError("head_forward: regression branch must output 8 channels");
  }
  BEVGrid hc = conv2d(bev, p.cls_conv);
  gelu_inplace(hc.values());
  BEVGrid heat = conv2d(hc, p.cls_out);
  for (float& v : heat.values()) v = sigmoid(v);

  BEVGrid hr = conv2d(bev, p.reg_conv);
  gelu_inplace(hr.values());
  BEVGrid reg = conv2d(hr, p.reg_out);
  return {std::move(heat), std::move(reg)};
}

// Cell (iy, ix) of class c is a peak when its value is >= every in-grid
// neighbour in the surrounding 3x3 window (plateaus keep all members).
inline bool is_local_max(const BEVGrid& heat, std::size_t iy, std::size_t ix, std::size_t c) {
  const float v = heat.at(iy, ix, c);
  const std::size_t y0 = iy == 0 ? 0 : iy - 1;
  const std::size_t x0 = ix == 0 ? 0 : ix - 1;
  const std::size_t y1 = std::min(iy + 1, heat.height() - 1);
  const std::size_t x1 = std::min(ix + 1, heat.width() - 1);
  for (std::size_t y = y0; y <= y1; ++y)
    for (std::size_t x = x0; x <= x1; ++x)
      if (heat.at(y, x, c) > v) return false;
  return true;
}

// Peaks >= score_thresh, sorted by descending score with ties broken by
// (class_id, iy, ix) ascending, truncated to top_k.
inline std::vector<Detection> decode(const HeadOutput& out, const VoxelGridConfig& cfg,
                                     float score_thresh, std::size_t top_k) {
  const BEVGrid& heat = out.heatmap;
  const BEVGrid& reg = out.reg;
  if (reg.height() != heat.height() || reg.width() != heat.width() ||
      reg.channels() != kRegChannels) {
    throw ShapeError("decode: heatmap and regression maps disagree");
  }
  struct Peak {
    float score;
    std::uint32_t cls, iy, ix;
  };
  std::vector<Peak> peaks;
  for (std::size_t iy = 0; iy < heat.height(); ++iy)
    for (std::size_t ix = 0; ix < heat.width(); ++ix)
      for (std::size_t c = 0; c < heat.channels(); ++c) {
        const float v = heat.at(iy, ix, c);
        if (v >= score_thresh && is_local_max(heat, iy, ix, c)) {
          peaks.push_back({v, static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(iy),
                           static_cast<std::uint32_t>(ix)});
        }
      }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.cls != b.cls) return a.cls < b.cls;
    if (a.iy != b.iy) return a.iy < b.iy;
    return a.ix < b.ix;
  });
  if (peaks.size() > top_k) peaks.resize(top_k);

  std::vector<Detection> dets;
  dets.reserve(peaks.size());
  for (const Peak& pk : peaks) {
    const auto r = reg.cell(pk.iy, pk.ix);
    const double dx = std::clamp(r[0], -1.0f, 1.0f);
    const double dy = std::clamp(r[1], -1.0f, 1.0f);
    Detection d;
    d.class_id = static_cast<std::int32_t>(pk.cls);
    d.score = pk.score;
    d.x = static_cast<float>(cfg.range.x_min + (pk.ix + 0.5 + dx) * cfg.sx);
    d.y = static_cast<float>(cfg.range.y_min + (pk.iy + 0.5 + dy) * cfg.sy);
    d.z = r[2];
    d.l = std::exp(std::clamp(r[3], -kMaxLogSize, kMaxLogSize));
    d.w = std::exp(std::clamp(r[4], -kMaxLogSize, kMaxLogSize));
    d.h = std::exp(std::clamp(r[5], -kMaxLogSize, kMaxLogSize));
    d.yaw = wrap_angle(std::atan2(static_cast<double>(r[6]), static_cast<double>(r[7])));
    dets.push_back(d);
  }
  return dets;
}

inline FlopsReport head_flops(std::size_t height, std::size_t width, std::size_t in_channels,
                              std::size_t hidden, std::size_t num_classes) {
  const std::uint64_t hw = static_cast<std::uint64_t>(height) * width;
  FlopsReport r;
  r.add("conv2d", count_op(op::Conv2d{height, width, in_channels, hidden, 3}));
  r.add("conv2d", count_op(op::Conv2d{height, width, in_channels, hidden, 3}));
  r.add("gelu", count_op(op::Gelu{2 * hw * hidden}));
  r.add("conv2d", count_op(op::Conv2d{height, width, hidden, num_classes, 1}));
  r.add("conv2d", count_op(op::Conv2d{height, width, hidden, kRegChannels, 1}));
  r.add("sigmoid", count_op(op::Sigmoid{hw * num_classes}));
  return r;
}

}  // namespace falo
