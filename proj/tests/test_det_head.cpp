#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace falo;

namespace {

VoxelGridConfig origin_grid() {
  VoxelGridConfig cfg;
  cfg.range = {0.0, 0.0, -3.0, 19.2, 19.2, 5.0};
  return cfg;
}

HeadOutput blank(std::size_t h, std::size_t w, std::size_t ncls) {
  return {BEVGrid(h, w, ncls), BEVGrid(h, w, kRegChannels)};
}

}  // namespace

TEST(HeadForward, ZeroParamsGiveHalfAndZero) {
  const Conv2dParams c3{3, 4, 5, std::vector<float>(3 * 3 * 4 * 5, 0.0f), std::vector<float>(5, 0.0f)};
  const HeadParams p{c3, {1, 5, 3, std::vector<float>(15, 0.0f), std::vector<float>(3, 0.0f)}, c3,
                     {1, 5, 8, std::vector<float>(40, 0.0f), std::vector<float>(8, 0.0f)}};
  const auto out = head_forward(BEVGrid(6, 7, 4), p);
  for (float v : out.heatmap.values()) EXPECT_EQ(v, 0.5f);
  for (float v : out.reg.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(out.heatmap.channels(), 3u);
  EXPECT_EQ(out.reg.channels(), 8u);
}

TEST(HeadForward, MatchesOracle) {
  SplitMix64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = oracle::random_head(rng, 1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(3));
    const auto x = oracle::random_grid(rng, 1 + rng.below(10), 1 + rng.below(10), p.cls_conv.in_channels);
    const auto out = head_forward(x, p), ref = oracle::head(x, p);
    EXPECT_LE(oracle::max_abs_diff(out.heatmap.values(), ref.heatmap.values()), 1e-6);
    EXPECT_LE(oracle::max_abs_diff(out.reg.values(), ref.reg.values()), 1e-6);
    for (float v : out.heatmap.values()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(HeadForward, ShapeErrors) {
  SplitMix64 rng(72);
  auto p = oracle::random_head(rng, 4, 3, 2);
  EXPECT_THROW(head_forward(BEVGrid(4, 4, 5), p), ShapeError);
  p.reg_out = oracle::random_conv(rng, 1, 3, 7);
  EXPECT_THROW(head_forward(BEVGrid(4, 4, 4), p), ShapeError);
}

TEST(Decode, SinglePeakHandExample) {
  auto out = blank(20, 30, 3);
  out.heatmap.at(10, 20, 1) = 0.9f;
  const auto dets = decode(out, origin_grid(), 0.1f, 100);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_NEAR(dets[0].x, 6.15, 1e-6);
  EXPECT_NEAR(dets[0].y, 3.15, 1e-6);
  EXPECT_EQ(dets[0].score, 0.9f);
  EXPECT_EQ(dets[0].class_id, 1);
  EXPECT_EQ(dets[0].l, 1.0f);
  EXPECT_NEAR(dets[0].yaw, 0.0, 1e-12);
}

TEST(Decode, BelowThresholdIsEmpty) {
  auto out = blank(5, 5, 2);
  for (float& v : out.heatmap.values()) v = 0.05f;
  EXPECT_TRUE(decode(out, origin_grid(), 0.1f, 100).empty());
}

TEST(Decode, TieOrderIsClassThenRowThenColumn) {
  auto out = blank(10, 10, 2);
  out.heatmap.at(5, 1, 1) = 0.7f;
  out.heatmap.at(5, 8, 0) = 0.7f;
  out.heatmap.at(1, 8, 0) = 0.7f;
  out.heatmap.at(8, 1, 0) = 0.8f;
  const auto dets = decode(out, origin_grid(), 0.1f, 100);
  ASSERT_EQ(dets.size(), 4u);
  EXPECT_EQ(dets[0].score, 0.8f);
  EXPECT_EQ(dets[1].class_id, 0);
  EXPECT_NEAR(dets[1].y, 1.5 * 0.3, 1e-6);
  EXPECT_EQ(dets[2].class_id, 0);
  EXPECT_NEAR(dets[2].y, 5.5 * 0.3, 1e-6);
  EXPECT_EQ(dets[3].class_id, 1);
}

TEST(Decode, TopKTruncates) {
  auto out = blank(12, 12, 1);
  for (std::size_t i = 0; i < 4; ++i) out.heatmap.at(2 * i + 1, 2 * i + 1, 0) = 0.2f + 0.1f * i;
  const auto dets = decode(out, origin_grid(), 0.1f, 2);
  ASSERT_EQ(dets.size(), 2u);
  EXPECT_EQ(dets[0].score, 0.5f);
  EXPECT_EQ(dets[1].score, 0.2f + 0.1f * 2);
}

TEST(Decode, ClampsOffsetsAndSizes) {
  auto out = blank(8, 8, 1);
  out.heatmap.at(3, 4, 0) = 0.6f;
  auto r = out.reg.cell(3, 4);
  r[0] = 50.0f;
  r[1] = -50.0f;
  r[2] = 1.25f;
  r[3] = 1000.0f;
  r[4] = -1000.0f;
  r[5] = std::log(2.0f);
  r[6] = 0.0f;
  r[7] = -1.0f;
  const auto dets = decode(out, origin_grid(), 0.1f, 10);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_NEAR(dets[0].x, (4 + 0.5 + 1) * 0.3, 1e-6);
  EXPECT_NEAR(dets[0].y, (3 + 0.5 - 1) * 0.3, 1e-6);
  EXPECT_EQ(dets[0].z, 1.25f);
  EXPECT_EQ(dets[0].l, std::exp(kMaxLogSize));
  EXPECT_EQ(dets[0].w, std::exp(-kMaxLogSize));
  EXPECT_GT(dets[0].w, 0.0f);
  EXPECT_NEAR(dets[0].h, 2.0f, 1e-6);
  EXPECT_EQ(dets[0].yaw, static_cast<float>(M_PI));
}

TEST(Decode, LocalMaxMatchesAllPairsOracle) {
  auto out = blank(5, 5, 1);
  const float crafted[5][5] = {{0.9f, 0.2f, 0.3f, 0.3f, 0.1f},
                               {0.2f, 0.5f, 0.4f, 0.2f, 0.6f},
                               {0.1f, 0.4f, 0.4f, 0.2f, 0.6f},
                               {0.7f, 0.2f, 0.3f, 0.8f, 0.1f},
                               {0.05f, 0.7f, 0.2f, 0.3f, 0.35f}};
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 5; ++x) out.heatmap.at(y, x, 0) = crafted[y][x];
  const auto expected = oracle::peaks_all_pairs(out.heatmap, 0, 0.1f);
  std::vector<std::pair<std::size_t, std::size_t>> got;
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 5; ++x)
      if (out.heatmap.at(y, x, 0) >= 0.1f && is_local_max(out.heatmap, y, x, 0)) got.emplace_back(y, x);
  EXPECT_EQ(got, expected);
  EXPECT_EQ(decode(out, origin_grid(), 0.1f, 100).size(), expected.size());
}

TEST(Decode, RandomHeatmapsInvariants) {
  SplitMix64 rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    auto out = blank(1 + rng.below(12), 1 + rng.below(12), 1 + rng.below(3));
    for (float& v : out.heatmap.values()) v = static_cast<float>(rng.below(5)) / 4.0f;
    for (float& v : out.reg.values()) v = static_cast<float>(rng.uniform(-3, 3));
    const std::size_t top_k = 1 + rng.below(20);
    const auto dets = decode(out, origin_grid(), 0.25f, top_k);
    std::size_t total = 0;
    for (std::size_t c = 0; c < out.heatmap.channels(); ++c)
      total += oracle::peaks_all_pairs(out.heatmap, c, 0.25f).size();
    EXPECT_EQ(dets.size(), std::min(total, top_k));
    for (std::size_t i = 0; i < dets.size(); ++i) {
      EXPECT_GE(dets[i].score, 0.25f);
      EXPECT_GT(dets[i].l, 0.0f);
      // Float32 yaw lives in (-pi, pi] after rounding pi to float.
      EXPECT_GT(dets[i].yaw, -static_cast<float>(M_PI));
      EXPECT_LE(dets[i].yaw, static_cast<float>(M_PI));
      if (i) {
        EXPECT_GE(dets[i - 1].score, dets[i].score);
      }
    }
  }
}

TEST(HeadFlops, CountsBothBranches) {
  const auto r = head_flops(10, 10, 4, 3, 2);
  EXPECT_EQ(r.macs, 100u * (2 * 9 * 4 * 3 + 3 * 2 + 3 * 8));
}
