#pragma once

// ConvDotMix token-mixing backbone over the serialized pillar sequence, with
// implicit grouping: the [1, N, D] sequence is padded once and viewed as
// [N_pad / K, K, D] so each group of K consecutive tokens is an independent
// batch row. Group sizes may change between layers; every change is a pure
// reshape because N_pad is a multiple of every scheduled size.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "falo/error.hpp"
#include "falo/flops.hpp"
#include "falo/kernels.hpp"
#include "falo/tensor.hpp"

namespace falo {

inline constexpr std::size_t kFfnExpansion = 4;

enum class ScheduleKind { none, constant, increasing, decreasing };

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::none: return "none";
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::increasing: return "increasing";
    case ScheduleKind::decreasing: return "decreasing";
  }
  return "?";
}

struct GroupSchedule {
  ScheduleKind kind = ScheduleKind::increasing;
  // One group size per layer. Ignored for ScheduleKind::none, where every layer
  // sees the whole sequence as a single group.
  std::vector<std::size_t> sizes{128, 128, 256, 256, 512, 512, 1024, 1024};

  static GroupSchedule whole_sequence(std::size_t layers) {
    return {ScheduleKind::none, std::vector<std::size_t>(layers, 0)};
  }

  std::size_t layers() const noexcept { return sizes.size(); }

  void validate() const {
    if (kind == ScheduleKind::none) return;
    if (sizes.empty()) throw ConfigError("backbone.schedule", "must list one size per layer");
    for (std::size_t s : sizes) {
      if (s < 1) throw ConfigError("backbone.schedule", "group sizes must be >= 1");
    }
    const auto ordered = [&](auto cmp) {
      return std::adjacent_find(sizes.begin(), sizes.end(), cmp) == sizes.end();
    };
    switch (kind) {
      case ScheduleKind::constant:
        if (!ordered(std::not_equal_to<>{}))
          throw ConfigError("backbone.schedule", "constant schedule must repeat one size");
        break;
      case ScheduleKind::increasing:
        if (!ordered(std::greater<>{}))
          throw ConfigError("backbone.schedule", "increasing schedule must be non-decreasing");
        break;
      case ScheduleKind::decreasing:
        if (!ordered(std::less<>{}))
          throw ConfigError("backbone.schedule", "decreasing schedule must be non-increasing");
        break;
      case ScheduleKind::none: break;
    }
  }

  // Least common multiple of all sizes; 1 when the sequence is never split.
  std::size_t pad_multiple() const {
    if (kind == ScheduleKind::none) return 1;
    std::size_t m = 1;
    for (std::size_t s : sizes) m = std::lcm(m, s);
    return m;
  }

  std::size_t group_size(std::size_t layer, std::size_t n_pad) const {
    return kind == ScheduleKind::none ? n_pad : sizes.at(layer);
  }
};

inline std::size_t padded_length(std::size_t n, std::size_t multiple) {
  return (n + multiple - 1) / multiple * multiple;
}

// Tokens with flat index >= valid_n are zero padding at the tail.
struct GroupedTokens {
  Tensor3 tokens;  // [N_pad / K, K, D]
  std::size_t valid_n = 0;
  std::vector<GridCoord> coords;  // length valid_n

  std::size_t n_pad() const noexcept { return tokens.batch() * tokens.tokens(); }
  std::size_t group_size() const noexcept { return tokens.tokens(); }
  std::size_t groups() const noexcept { return tokens.batch(); }
};

inline GroupedTokens pad_and_group(const TokenSequence& seq, std::size_t group_size,
                                   std::size_t pad_multiple) {
  seq.check();
  if (group_size < 1 || pad_multiple < 1) {
    throw ShapeError("pad_and_group: group size and pad multiple must be >= 1");
  }
  const std::size_t n = seq.size();
  const std::size_t n_pad = padded_length(n, pad_multiple);
  if (n_pad % group_size != 0) {
    throw ShapeError("pad_and_group: group size " + std::to_string(group_size) +
                     " does not divide padded length " + std::to_string(n_pad));
  }
  std::vector<float> data(n_pad * seq.dim, 0.0f);
  std::copy(seq.features.begin(), seq.features.end(), data.begin());
  GroupedTokens g{Tensor3(Shape3{n_pad / group_size, group_size, seq.dim}, std::move(data)),
                  n, seq.coords};
  return g;
}

inline GroupedTokens pad_and_group(const TokenSequence& seq, std::size_t group_size) {
  return pad_and_group(seq, group_size, group_size);
}

// Pads to the schedule's lcm and groups at the first layer's size.
inline GroupedTokens pad_and_group(const TokenSequence& seq, const GroupSchedule& schedule) {
  schedule.validate();
  const std::size_t n_pad = padded_length(seq.size(), schedule.pad_multiple());
  if (n_pad == 0) {
    return GroupedTokens{Tensor3(0, 0, seq.dim), 0, {}};
  }
  const std::size_t k = schedule.layers() == 0 ? n_pad : schedule.group_size(0, n_pad);
  return pad_and_group(seq, k, schedule.pad_multiple());
}

// Pure reshape of the flat token axis; storage is moved, never copied.
inline GroupedTokens regroup(GroupedTokens g, std::size_t group_size) {
  const std::size_t n_pad = g.n_pad();
  if (group_size == g.group_size()) return g;
  if (group_size < 1 || n_pad % group_size != 0) {
    throw ShapeError("regroup: group size " + std::to_string(group_size) +
                     " does not divide padded length " + std::to_string(n_pad));
  }
  g.tokens.reshape(n_pad / group_size, group_size);
  return g;
}

// Flatten and strip the pad tail.
inline TokenSequence ungroup(const GroupedTokens& g) {
  TokenSequence seq;
  seq.dim = g.tokens.channels();
  seq.coords = g.coords;
  const auto v = g.tokens.values();
  seq.features.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(g.valid_n * seq.dim));
  return seq;
}

inline void zero_pads(GroupedTokens& g) {
  auto v = g.tokens.values();
  std::fill(v.begin() + static_cast<std::ptrdiff_t>(g.valid_n * g.tokens.channels()), v.end(),
            0.0f);
}

struct ConvDotMixParams {
  NormParams norm1;
  LinearParams w_a1;         // D -> D, feeds the depthwise conv
  DepthwiseParams dw;        // D channels, K taps
  LinearParams w_b;          // D -> D, channel-only branch
  LinearParams w_out;        // D -> D, after the Hadamard product
  NormParams norm2;
  LinearParams w_ffn1;       // D -> 4D
  LinearParams w_ffn2;       // 4D -> D

  std::size_t dim() const noexcept { return w_a1.in_dim; }
  std::size_t kernel() const noexcept { return dw.taps; }

  void check() const {
    const std::size_t d = dim();
    const auto lin = [&](const LinearParams& p, std::size_t in, std::size_t out,
                         const char* name) {
      p.check();
      if (p.in_dim != in || p.out_dim != out) {
        throw ShapeError(std::string("ConvDotMixParams.") + name + ": expected " +
                         std::to_string(in) + "x" + std::to_string(out));
      }
    };
    lin(w_a1, d, d, "w_a1");
    lin(w_b, d, d, "w_b");
    lin(w_out, d, d, "w_out");
    lin(w_ffn1, d, kFfnExpansion * d, "w_ffn1");
    lin(w_ffn2, kFfnExpansion * d, d, "w_ffn2");
    dw.check();
    if (dw.channels != d) throw ShapeError("ConvDotMixParams.dw: channel count mismatch");
    for (const NormParams* n : {&norm1, &norm2}) {
      if (n->gamma.size() != d || n->beta.size() != d) {
        throw ShapeError("ConvDotMixParams: norm parameters must have length " +
                         std::to_string(d));
      }
    }
  }
};

// One ConvDotMix layer on a [groups, K, D] tensor, no pad handling:
//   U  = LN1(X)
//   A  = dwconv(U W_a1)          spatial branch
//   B  = U W_b                   channel-only branch
//   Y1 = X + (A * B) W_out
//   Y  = Y1 + GELU(LN2(Y1) W_ffn1) W_ffn2
inline Tensor3 convdotmix_tensor(const Tensor3& x, const ConvDotMixParams& p) {
  if (x.channels() != p.dim()) {
    throw ShapeError("convdotmix: input has " + std::to_string(x.channels()) +
                     " channels, layer expects " + std::to_string(p.dim()));
  }
  const Tensor3 u = layer_norm(x, p.norm1);
  const Tensor3 a = dwconv1d(linear(u, p.w_a1), p.dw);
  const Tensor3 b = linear(u, p.w_b);
  Tensor3 y = linear(hadamard(a, b), p.w_out);
  add_inplace(y, x);
  const Tensor3 ffn = linear(gelu(linear(layer_norm(y, p.norm2), p.w_ffn1)), p.w_ffn2);
  add_inplace(y, ffn);
  return y;
}

inline GroupedTokens convdotmix_forward(GroupedTokens g, const ConvDotMixParams& p) {
  g.tokens = convdotmix_tensor(g.tokens, p);
  zero_pads(g);
  return g;
}

using LayerObserver = std::function<void(std::size_t layer, const GroupedTokens&)>;

inline TokenSequence run_backbone(const TokenSequence& seq,
                                  const std::vector<ConvDotMixParams>& layers,
                                  const GroupSchedule& schedule,
                                  const LayerObserver& observer = {}) {
  schedule.validate();
  if (schedule.layers() != layers.size()) {
    throw ConfigError("backbone.schedule", "has " + std::to_string(schedule.layers()) +
                                               " entries for " + std::to_string(layers.size()) +
                                               " layers");
  }
  for (const auto& p : layers) {
    p.check();
    if (p.dim() != seq.dim) throw ShapeError("run_backbone: token width differs from layer width");
  }
  if (seq.size() == 0 || layers.empty()) return seq;

  GroupedTokens g = pad_and_group(seq, schedule);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    g = regroup(std::move(g), schedule.group_size(l, g.n_pad()));
    g = convdotmix_forward(std::move(g), layers[l]);
    if (observer) observer(l, g);
  }
  return ungroup(g);
}

inline std::vector<OpDescriptor> convdotmix_ops(std::uint64_t batch, std::uint64_t tokens,
                                                std::uint64_t dim, std::uint64_t kernel) {
  const std::uint64_t e = batch * tokens * dim;
  const std::uint64_t h = kFfnExpansion * dim;
  return {
      op::LayerNorm{batch, tokens, dim},
      op::Linear{batch, tokens, dim, dim},
      op::DwConv1d{batch, tokens, dim, kernel},
      op::Linear{batch, tokens, dim, dim},
      op::Hadamard{batch, tokens, dim},
      op::Linear{batch, tokens, dim, dim},
      op::ResidualAdd{e},
      op::LayerNorm{batch, tokens, dim},
      op::Linear{batch, tokens, dim, h},
      op::Gelu{batch * tokens * h},
      op::Linear{batch, tokens, h, dim},
      op::ResidualAdd{e},
  };
}

inline FlopsReport convdotmix_flops(std::uint64_t batch, std::uint64_t tokens, std::uint64_t dim,
                                    std::uint64_t kernel) {
  return count_flops_all(convdotmix_ops(batch, tokens, dim, kernel));
}

// Counts every layer over the padded sequence; group size does not change the
// total since each op is linear in groups * group_size.
inline FlopsReport backbone_flops(std::size_t n_valid, std::size_t dim, std::size_t kernel,
                                  const GroupSchedule& schedule) {
  const std::size_t n_pad = padded_length(n_valid, schedule.pad_multiple());
  FlopsReport r;
  for (std::size_t l = 0; l < schedule.layers(); ++l) {
    const std::size_t k = schedule.group_size(l, n_pad);
    if (n_pad == 0) continue;
    r += convdotmix_flops(n_pad / k, k, dim, kernel);
  }
  return r;
}

}  // namespace falo
