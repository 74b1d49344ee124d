#pragma once

// End-to-end inference: voxelize -> encode -> serialize (once) -> ConvDotMix
// backbone -> BEV scatter -> BEV backbone -> head -> decode.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "falo/backbone3d.hpp"
#include "falo/bench.hpp"
#include "falo/bev_backbone.hpp"
#include "falo/config.hpp"
#include "falo/det_head.hpp"
#include "falo/detection.hpp"
#include "falo/scene_io.hpp"
#include "falo/serializer.hpp"
#include "falo/voxelizer.hpp"
#include "falo/weights.hpp"

namespace falo {

struct PipelineParams {
  EncoderParams encoder;
  std::vector<ConvDotMixParams> backbone;
  BevParams bev;
  HeadParams head;
};

inline std::string layer_prefix(std::size_t l) { return "backbone.layer" + std::to_string(l); }

inline std::string bev_block_prefix(std::size_t s, std::size_t b) {
  return "bev.stage" + std::to_string(s) + ".block" + std::to_string(b);
}

inline ParamLayout parameter_layout(const PipelineConfig& cfg) {
  ParamLayout out;
  const std::size_t d = cfg.voxel.feature_dim;
  layout_linear(out, "encoder.w", "encoder.b", kPointFeatures, d);
  for (std::size_t l = 0; l < cfg.backbone.layers; ++l) {
    layout_convdotmix(out, layer_prefix(l), d, cfg.backbone.kernel);
  }
  std::size_t cin = d;
  for (std::size_t s = 0; s < kBevStages; ++s) {
    const std::size_t c = cfg.bev.stage_channels(s);
    const std::string p = "bev.stage" + std::to_string(s);
    layout_conv2d(out, p + ".entry", 3, cin, c);
    for (std::size_t b = 0; b < cfg.bev.stage_blocks[s]; ++b) {
      layout_conv2d(out, bev_block_prefix(s, b) + ".conv1", 3, c, c);
      layout_conv2d(out, bev_block_prefix(s, b) + ".conv2", 3, c, c);
    }
    cin = c;
  }
  layout_conv2d(out, "bev.fuse", 1, cfg.bev.concat_channels(), cfg.bev.fused_channels);
  const std::size_t hc = cfg.head.hidden_channels;
  layout_conv2d(out, "head.cls_conv", 3, cfg.bev.fused_channels, hc);
  layout_conv2d(out, "head.cls_out", 1, hc, cfg.head.num_classes);
  layout_conv2d(out, "head.reg_conv", 3, cfg.bev.fused_channels, hc);
  layout_conv2d(out, "head.reg_out", 1, hc, kRegChannels);
  return out;
}

inline WeightStore random_weights(const PipelineConfig& cfg, std::uint64_t seed) {
  return random_weights(parameter_layout(cfg), seed);
}

// Tensors not named by the layout are ignored.
inline PipelineParams params_from_weights(const WeightStore& store, const PipelineConfig& cfg) {
  check_layout(store, parameter_layout(cfg));
  const std::size_t d = cfg.voxel.feature_dim;
  PipelineParams p;
  p.encoder.linear = take_linear(store, "encoder.w", "encoder.b", kPointFeatures, d);
  for (std::size_t l = 0; l < cfg.backbone.layers; ++l) {
    p.backbone.push_back(take_convdotmix(store, layer_prefix(l), d, cfg.backbone.kernel));
  }
  std::size_t cin = d;
  for (std::size_t s = 0; s < kBevStages; ++s) {
    const std::size_t c = cfg.bev.stage_channels(s);
    auto& stage = p.bev.stages[s];
    stage.entry = take_conv2d(store, "bev.stage" + std::to_string(s) + ".entry", 3, cin, c);
    for (std::size_t b = 0; b < cfg.bev.stage_blocks[s]; ++b) {
      stage.blocks.push_back({take_conv2d(store, bev_block_prefix(s, b) + ".conv1", 3, c, c),
                              take_conv2d(store, bev_block_prefix(s, b) + ".conv2", 3, c, c)});
    }
    cin = c;
  }
  p.bev.fuse = take_conv2d(store, "bev.fuse", 1, cfg.bev.concat_channels(), cfg.bev.fused_channels);
  const std::size_t hc = cfg.head.hidden_channels;
  p.head.cls_conv = take_conv2d(store, "head.cls_conv", 3, cfg.bev.fused_channels, hc);
  p.head.cls_out = take_conv2d(store, "head.cls_out", 1, hc, cfg.head.num_classes);
  p.head.reg_conv = take_conv2d(store, "head.reg_conv", 3, cfg.bev.fused_channels, hc);
  p.head.reg_out = take_conv2d(store, "head.reg_out", 1, hc, kRegChannels);
  return p;
}

struct StageFlops {
  std::string stage;
  FlopsReport flops;
};

struct InferenceResult {
  std::vector<Detection> detections;
  std::size_t n_points = 0;
  std::size_t n_tokens = 0;
  std::size_t n_pad = 0;
  std::vector<StageFlops> stage_flops;

  FlopsReport total_flops() const {
    FlopsReport r;
    for (const auto& s : stage_flops) r += s.flops;
    return r;
  }
};

inline InferenceResult run_inference(const PipelineConfig& cfg, const PointCloud& cloud,
                                     const PipelineParams& params) {
  cfg.validate();
  InferenceResult result;
  result.n_points = cloud.size();
  const std::size_t H = cfg.voxel.grid_h();
  const std::size_t W = cfg.voxel.grid_w();
  const std::size_t D = cfg.voxel.feature_dim;

  const PillarSet pillars = assign_pillars(cloud, cfg.voxel);
  const VoxelFeatures feats = encode_pillars(pillars, cfg.voxel, params.encoder);
  result.n_tokens = feats.size();
  result.n_pad = padded_length(feats.size(), cfg.backbone.schedule.pad_multiple());
  result.stage_flops.push_back({"encoder", encoder_flops(pillars, D)});

  const SerializationOrder order = build_order(feats.coords, cfg.serial);
  const TokenSequence seq = apply_order(feats, order);
  const TokenSequence mixed = run_backbone(seq, params.backbone, cfg.backbone.schedule);
  result.stage_flops.push_back(
      {"backbone3d", backbone_flops(seq.size(), D, cfg.backbone.kernel, cfg.backbone.schedule)});

  const BEVGrid bev_in = scatter_to_bev(mixed, H, W);
  const BEVGrid fused = bev_forward(bev_in, cfg.bev, params.bev);
  result.stage_flops.push_back({"bev_backbone", bev_flops(H, W, D, cfg.bev)});

  const HeadOutput out = head_forward(fused, params.head);
  result.stage_flops.push_back({"head", head_flops(H, W, cfg.bev.fused_channels,
                                                   cfg.head.hidden_channels,
                                                   cfg.head.num_classes)});
  result.detections = decode(out, cfg.voxel, cfg.head.score_thresh, cfg.head.top_k);
  return result;
}

// Analytic cost for a sequence of n_tokens voxels: the token-dependent 3D
// backbone, an equal-depth stack of full self-attention layers over the same
// tokens as reference, and the token-independent dense BEV stages.
struct FlopsSummary {
  std::size_t n_tokens = 0;
  std::size_t n_pad = 0;
  std::vector<FlopsReport> backbone_layers;
  FlopsReport backbone;
  FlopsReport attention_reference;
  FlopsReport bev;
  FlopsReport head;
};

inline FlopsSummary pipeline_flops(const PipelineConfig& cfg, std::size_t n_tokens) {
  FlopsSummary s;
  s.n_tokens = n_tokens;
  const GroupSchedule& sched = cfg.backbone.schedule;
  s.n_pad = padded_length(n_tokens, sched.pad_multiple());
  const std::size_t d = cfg.backbone.dim;
  for (std::size_t l = 0; l < sched.layers(); ++l) {
    FlopsReport layer;
    if (s.n_pad > 0) {
      const std::size_t k = sched.group_size(l, s.n_pad);
      layer = convdotmix_flops(s.n_pad / k, k, d, cfg.backbone.kernel);
    }
    s.backbone += layer;
    s.backbone_layers.push_back(std::move(layer));
    s.attention_reference += attention_flops_reference(1, n_tokens, d);
  }
  const std::size_t H = cfg.voxel.grid_h(), W = cfg.voxel.grid_w();
  s.bev = bev_flops(H, W, d, cfg.bev);
  s.head = head_flops(H, W, cfg.bev.fused_channels, cfg.head.hidden_channels,
                      cfg.head.num_classes);
  return s;
}

}  // namespace falo
