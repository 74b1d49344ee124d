#pragma once

// Dense residual BEV backbone: three stages (strides 1, 2, 2; channels
// base, 2*base, 4*base), each an entry conv followed by residual blocks. The
// stage outputs are nearest-upsampled to full resolution, concatenated and
// fused with a 1x1 conv.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "falo/conv2d.hpp"
#include "falo/error.hpp"
#include "falo/flops.hpp"
#include "falo/kernels.hpp"
#include "falo/tensor.hpp"

namespace falo {

inline constexpr std::size_t kBevStages = 3;

struct BEVConfig {
  std::array<std::size_t, kBevStages> stage_blocks{2, 3, 3};
  std::size_t base_channels = 64;
  std::size_t fused_channels = 128;

  std::size_t stage_channels(std::size_t s) const noexcept { return base_channels << s; }
  static std::size_t stage_stride(std::size_t s) noexcept { return s == 0 ? 1 : 2; }
  std::size_t concat_channels() const noexcept { return 7 * base_channels; }

  void validate() const {
    for (std::size_t b : stage_blocks) {
      if (b < 1) throw ConfigError("bev.stage_blocks", "each stage needs >= 1 block");
    }
    if (base_channels < 1) throw ConfigError("bev.base_channels", "must be >= 1");
    if (fused_channels < 1) throw ConfigError("bev.fused_channels", "must be >= 1");
  }
};

struct ResidualBlockParams {
  Conv2dParams conv1;
  Conv2dParams conv2;
};

// y = GELU(x + conv2(GELU(conv1(x)))), 3x3 stride 1, channel preserving.
inline BEVGrid residual_block(const BEVGrid& x, const ResidualBlockParams& p) {
  if (p.conv1.in_channels != x.channels() || p.conv1.out_channels != x.channels() ||
      p.conv2.in_channels != x.channels() || p.conv2.out_channels != x.channels()) {
    throw ShapeError("residual_block: convs must map " + std::to_string(x.channels()) +
                     " channels to themselves");
  }
  BEVGrid h = conv2d(x, p.conv1);
  gelu_inplace(h.values());
  BEVGrid y = conv2d(h, p.conv2);
  auto yv = y.values();
  const auto xv = x.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = gelu(xv[i] + yv[i]);
  return y;
}

struct BevStageParams {
  Conv2dParams entry;
  std::vector<ResidualBlockParams> blocks;
};

struct BevParams {
  std::array<BevStageParams, kBevStages> stages;
  Conv2dParams fuse;  // 1x1, concat_channels -> fused_channels
};

inline BEVGrid bev_forward(const BEVGrid& x, const BEVConfig& cfg, const BevParams& params) {
  cfg.validate();
  if (x.height() % 4 != 0 || x.width() % 4 != 0) {
    throw ShapeError("bev_forward: grid " + std::to_string(x.height()) + "x" +
                     std::to_string(x.width()) + " must be divisible by 4");
  }
  std::array<BEVGrid, kBevStages> outs;
  const BEVGrid* in = &x;
  for (std::size_t s = 0; s < kBevStages; ++s) {
    const BevStageParams& sp = params.stages[s];
    if (sp.blocks.size() != cfg.stage_blocks[s]) {
      throw ShapeError("bev_forward: stage " + std::to_string(s) + " has " +
                       std::to_string(sp.blocks.size()) + " blocks, config says " +
                       std::to_string(cfg.stage_blocks[s]));
    }
    BEVGrid h = conv2d(*in, sp.entry, BEVConfig::stage_stride(s));
    gelu_inplace(h.values());
    for (const auto& block : sp.blocks) h = residual_block(h, block);
    outs[s] = std::move(h);
    in = &outs[s];
  }

  // 1x1 fuse over the implicit concatenation [stage0 | up2(stage1) | up4(stage2)].
  const Conv2dParams& f = params.fuse;
  f.check();
  std::size_t concat = 0;
  for (const auto& o : outs) concat += o.channels();
  if (f.kernel != 1 || f.in_channels != concat) {
    throw ShapeError("bev_forward: fuse must be 1x1 over " + std::to_string(concat) + " channels");
  }
  const std::size_t H = x.height(), W = x.width(), cout = f.out_channels;
  BEVGrid y(H, W, cout);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      float* yr = y.cell(r, c).data();
      for (std::size_t co = 0; co < cout; ++co) yr[co] = f.bias[co];
      std::size_t base = 0;
      for (std::size_t s = 0; s < kBevStages; ++s) {
        const auto src = outs[s].cell(r >> s, c >> s);
        for (std::size_t ci = 0; ci < src.size(); ++ci) {
          const float a = src[ci];
          const float* wr = f.weight.data() + (base + ci) * cout;
          for (std::size_t co = 0; co < cout; ++co) yr[co] += a * wr[co];
        }
        base += src.size();
      }
    }
  }
  return y;
}

inline FlopsReport bev_flops(std::size_t height, std::size_t width, std::size_t in_channels,
                             const BEVConfig& cfg) {
  FlopsReport r;
  std::uint64_t h = height, w = width, cin = in_channels;
  for (std::size_t s = 0; s < kBevStages; ++s) {
    const std::uint64_t c = cfg.stage_channels(s);
    if (s > 0) {
      h = conv_output_size(h, 3, 2);
      w = conv_output_size(w, 3, 2);
    }
    r.add("conv2d", count_op(op::Conv2d{h, w, cin, c, 3}));
    r.add("gelu", count_op(op::Gelu{h * w * c}));
    for (std::size_t b = 0; b < cfg.stage_blocks[s]; ++b) {
      r.add("conv2d", count_op(op::Conv2d{h, w, c, c, 3}));
      r.add("conv2d", count_op(op::Conv2d{h, w, c, c, 3}));
      r.add("gelu", count_op(op::Gelu{2 * h * w * c}));
      r.add("residual_add", count_op(op::ResidualAdd{h * w * c}));
    }
    cin = c;
  }
  r.add("conv2d", count_op(op::Conv2d{height, width, cfg.concat_channels(),
                                      cfg.fused_channels, 1}));
  return r;
}

}  // namespace falo
