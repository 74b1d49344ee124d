#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace falo;

TEST(Linear, IdentityWeightsReturnInput) {
  SplitMix64 rng(1);
  const Tensor3 x = oracle::random_tensor(rng, 2, 3, 4);
  LinearParams p{4, 4, std::vector<float>(16, 0.0f), std::vector<float>(4, 0.0f)};
  for (int i = 0; i < 4; ++i) p.weight[i * 4 + i] = 1.0f;
  EXPECT_EQ(linear(x, p), x);
}

TEST(Linear, ZeroInputGivesBiasRows) {
  const Tensor3 x(2, 5, 3);
  LinearParams p{3, 2, std::vector<float>(6, 0.7f), {1.5f, -2.0f}};
  const Tensor3 y = linear(x, p);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(y.flat_row(i)[0], 1.5f);
    EXPECT_EQ(y.flat_row(i)[1], -2.0f);
  }
}

TEST(Linear, MatchesTripleLoop) {
  SplitMix64 rng(2);
  const Tensor3 x = oracle::random_tensor(rng, 2, 5, 8);
  const LinearParams p = oracle::random_linear(rng, 8, 3);
  const Tensor3 y = linear(x, p);
  ASSERT_EQ(y.shape(), (Shape3{2, 5, 3}));
  const auto ref = oracle::linear({x.values().begin(), x.values().end()}, 10, p);
  EXPECT_LE(oracle::max_abs_diff(y.values(), ref), 1e-6);
}

TEST(Linear, RejectsShapeMismatch) {
  const Tensor3 x(1, 2, 3);
  LinearParams p{4, 2, std::vector<float>(8), std::vector<float>(2)};
  EXPECT_THROW(linear(x, p), ShapeError);
  LinearParams bad{3, 2, std::vector<float>(5), std::vector<float>(2)};
  EXPECT_THROW(linear(x, bad), ShapeError);
}

TEST(Linear, RandomShapesMatchOracle) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = 1 + rng.below(8), t = 1 + rng.below(64), cin = 1 + rng.below(128),
                      cout = 1 + rng.below(64);
    const Tensor3 x = oracle::random_tensor(rng, b, t, cin);
    const LinearParams p = oracle::random_linear(rng, cin, cout);
    const auto ref = oracle::linear({x.values().begin(), x.values().end()}, b * t, p);
    EXPECT_LE(oracle::max_abs_diff(linear(x, p).values(), ref), 1e-6);
  }
}

TEST(DwConv1d, UnitKernelIsIdentity) {
  SplitMix64 rng(4);
  const Tensor3 x = oracle::random_tensor(rng, 2, 7, 3);
  DepthwiseParams p{3, 1, {1.0f, 1.0f, 1.0f}, {0.0f, 0.0f, 0.0f}};
  EXPECT_EQ(dwconv1d(x, p), x);
}

TEST(DwConv1d, ImpulseGivesReversedKernel) {
  for (std::size_t K : {5u, 9u}) {
    Tensor3 x(1, 9, 1);
    x.at(0, 4, 0) = 1.0f;
    DepthwiseParams p{1, K, {}, {0.0f}};
    for (std::size_t j = 0; j < K; ++j) p.weight.push_back(static_cast<float>(j + 1));
    const Tensor3 y = dwconv1d(x, p);
    // y[t] = k[4 - t + r]: the kernel read backwards, centered on t = 4.
    std::vector<float> expected = K == 5 ? std::vector<float>{0, 0, 5, 4, 3, 2, 1, 0, 0}
                                         : std::vector<float>{9, 8, 7, 6, 5, 4, 3, 2, 1};
    EXPECT_EQ(std::vector<float>(y.values().begin(), y.values().end()), expected) << "K=" << K;
  }
}

TEST(DwConv1d, MatchesNaiveLoop) {
  SplitMix64 rng(5);
  const Tensor3 x = oracle::random_tensor(rng, 3, 32, 16);
  DepthwiseParams p{16, 11, oracle::random_vector(rng, 16 * 11), oracle::random_vector(rng, 16)};
  const auto ref = oracle::dwconv1d({x.values().begin(), x.values().end()}, 3, 32, 16, p);
  EXPECT_LE(oracle::max_abs_diff(dwconv1d(x, p).values(), ref), 1e-6);
}

TEST(DwConv1d, KernelLongerThanRowIsZeroPadded) {
  SplitMix64 rng(6);
  const Tensor3 x = oracle::random_tensor(rng, 2, 3, 4);
  DepthwiseParams p{4, 5, oracle::random_vector(rng, 20), oracle::random_vector(rng, 4)};
  const auto ref = oracle::dwconv1d({x.values().begin(), x.values().end()}, 2, 3, 4, p);
  EXPECT_LE(oracle::max_abs_diff(dwconv1d(x, p).values(), ref), 1e-6);
}

TEST(DwConv1d, RejectsEvenKernelAndChannelMismatch) {
  const Tensor3 x(1, 4, 2);
  EXPECT_THROW(dwconv1d(x, DepthwiseParams{2, 4, std::vector<float>(8), std::vector<float>(2)}),
               ShapeError);
  EXPECT_THROW(dwconv1d(x, DepthwiseParams{3, 3, std::vector<float>(9), std::vector<float>(3)}),
               ShapeError);
}

TEST(DwConv1d, TranslationEquivariantInInterior) {
  SplitMix64 rng(7);
  const std::size_t T = 64, C = 4, K = 11, r = 5;
  DepthwiseParams p{C, K, oracle::random_vector(rng, C * K), oracle::random_vector(rng, C)};
  for (std::size_t s : {1u, 3u, 17u, 40u}) {
    Tensor3 x(1, T, C), shifted(1, T, C);
    for (std::size_t t = 0; t + s < T; ++t)
      for (std::size_t c = 0; c < C; ++c) {
        const float v = static_cast<float>(rng.uniform(-1, 1));
        x.at(0, t, c) = v;
        shifted.at(0, t + s, c) = v;
      }
    const Tensor3 y = dwconv1d(x, p), ys = dwconv1d(shifted, p);
    // Outputs whose windows are fully inside the row in both inputs.
    for (std::size_t t = r; t + r + s < T; ++t)
      for (std::size_t c = 0; c < C; ++c) EXPECT_EQ(y.at(0, t, c), ys.at(0, t + s, c));
  }
}

TEST(LayerNorm, NormalizesRow) {
  Tensor3 x(Shape3{1, 1, 3}, {1.0f, 2.0f, 3.0f});
  const NormParams p{{1, 1, 1}, {0, 0, 0}};
  const Tensor3 y = layer_norm(x, p);
  const auto r = y.flat_row(0);
  const double mean = (r[0] + r[1] + r[2]) / 3.0;
  double var = 0;
  for (float v : r) var += (v - mean) * (v - mean);
  var /= 3.0;
  EXPECT_NEAR(mean, 0.0, 1e-6);
  // Population variance of [1,2,3] is 2/3; normalized variance is v / (v + eps).
  EXPECT_NEAR(var, 1.0, 1e-4);
  EXPECT_NEAR(var, (2.0 / 3.0) / (2.0 / 3.0 + 1e-5), 1e-6);
}

TEST(LayerNorm, ConstantRowGivesBeta) {
  Tensor3 x(1, 2, 5, 0.1f);
  const NormParams p{{2, 2, 2, 2, 2}, {0.5f, -1, 0, 3, 7}};
  const Tensor3 y = layer_norm(x, p);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(y.flat_row(i)[c], p.beta[c]);
}

TEST(LayerNorm, RandomRowsAreStandardized) {
  SplitMix64 rng(8);
  const Tensor3 x = oracle::random_tensor(rng, 4, 50, 64);
  const NormParams p{std::vector<float>(64, 1.0f), std::vector<float>(64, 0.0f)};
  const Tensor3 y = layer_norm(x, p);
  for (std::size_t i = 0; i < 200; ++i) {
    double m = 0, v = 0;
    for (float e : y.flat_row(i)) m += e;
    m /= 64;
    for (float e : y.flat_row(i)) v += (e - m) * (e - m);
    v /= 64;
    EXPECT_LE(std::abs(m), 1e-5);
    EXPECT_LE(std::abs(v - 1.0), 1e-4);
  }
  const auto ref = oracle::layer_norm({x.values().begin(), x.values().end()}, 200, 64, p);
  EXPECT_LE(oracle::max_abs_diff(y.values(), ref), 1e-6);
}

TEST(LayerNorm, RejectsWrongParamLength) {
  EXPECT_THROW(layer_norm(Tensor3(1, 1, 3), NormParams{{1, 1}, {0, 0}}), ShapeError);
}

TEST(Hadamard, IdentityAnnihilatorAndOracle) {
  SplitMix64 rng(9);
  const Tensor3 a = oracle::random_tensor(rng, 2, 6, 5);
  EXPECT_EQ(hadamard(a, Tensor3(2, 6, 5, 1.0f)), a);
  EXPECT_EQ(hadamard(Tensor3(2, 6, 5), a), Tensor3(2, 6, 5));
  const Tensor3 b = oracle::random_tensor(rng, 2, 6, 5);
  const Tensor3 y = hadamard(a, b);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y.values()[i], a.values()[i] * b.values()[i]);
  EXPECT_THROW(hadamard(a, Tensor3(2, 5, 6)), ShapeError);
}

TEST(Gelu, KnownPoints) {
  EXPECT_EQ(gelu(0.0f), 0.0f);
  EXPECT_NEAR(gelu(10.0f), 10.0f, 1e-3);
  EXPECT_NEAR(gelu(1.0f), oracle::gelu(1.0), 1e-6);
  EXPECT_NEAR(gelu(-3.0f), oracle::gelu(-3.0), 1e-6);
  const Tensor3 t = gelu(Tensor3(Shape3{1, 1, 2}, {0.0f, 1.0f}));
  EXPECT_NEAR(t.values()[1], 0.8411920, 1e-6);
}

TEST(Kernels, RepeatedCallsAreBitIdentical) {
  SplitMix64 rng(10);
  const Tensor3 x = oracle::random_tensor(rng, 3, 40, 24);
  const auto layer = random_convdotmix_params(24, 11, 3);
  EXPECT_EQ(convdotmix_tensor(x, layer), convdotmix_tensor(x, layer));
}

TEST(CountFlops, DwConvTableShape) {
  const auto r = count_flops(op::DwConv1d{10, 600, 128, 11});
  EXPECT_EQ(r.macs, 8'448'000u);
  EXPECT_EQ(r.macs, oracle::count_dwconv_macs(10, 600, 128, 11));
  EXPECT_EQ(r.by_op.at("dwconv1d").macs, r.macs);
}

TEST(CountFlops, LinearWithNoOutputsIsZero) {
  EXPECT_EQ(count_flops(op::Linear{4, 100, 128, 0}).macs, 0u);
}

TEST(CountFlops, BucketsAndTotals) {
  EXPECT_EQ(count_flops(op::Hadamard{2, 3, 4}).muls, 24u);
  EXPECT_EQ(count_flops(op::LayerNorm{2, 3, 4}).adds, 24u);
  EXPECT_EQ(count_flops(op::Gelu{24}).adds, 24u);
  const FlopsReport r = convdotmix_flops(10, 600, 128, 11);
  OpCount sum;
  for (const auto& [name, c] : r.by_op) sum += c;
  EXPECT_EQ(sum, (OpCount{r.macs, r.muls, r.adds}));
  EXPECT_EQ(r.flops(), 2 * r.macs + r.muls + r.adds);
}

TEST(CountFlops, TableShapesShareTotals) {
  const std::uint64_t first = convdotmix_flops(1, 6000, 128, 11).macs;
  for (const Shape3& s : default_bench_shapes()) {
    EXPECT_EQ(convdotmix_flops(s.batch, s.tokens, s.channels, 11).macs, first);
    EXPECT_EQ(convdotmix_flops(s.batch, s.tokens, s.channels, 11),
              convdotmix_flops(1, 6000, 128, 11));
  }
  // 12 D^2 (four D x D linears, two D x 4D linears) plus D K per token.
  EXPECT_EQ(first, 6000ull * (11 * 128 * 128 + 128 * 11));
}

TEST(CountFlops, LinearIsLinearInTokensAndBatch) {
  const std::uint64_t base = count_flops(op::Linear{3, 50, 64, 32}).macs;
  for (std::uint64_t k = 1; k <= 5; ++k) {
    EXPECT_EQ(count_flops(op::Linear{3, 50 * k, 64, 32}).macs, k * base);
    EXPECT_EQ(count_flops(op::Linear{3 * k, 50, 64, 32}).macs, k * base);
  }
}
