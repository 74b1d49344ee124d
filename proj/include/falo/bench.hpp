#pragma once

// Latency harness for one ConvDotMix layer across tensor shapes, plus the
// analytic self-attention cost used as a scaling reference.
//
// Protocol: for each shape, `warmup` untimed forward passes, then `repeats`
// timed passes on std::chrono::steady_clock; each pass runs the full layer on a
// fixed random input. Statistics are order statistics of the per-pass times
// with linear interpolation between closest ranks.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "falo/backbone3d.hpp"
#include "falo/error.hpp"
#include "falo/flops.hpp"
#include "falo/rng.hpp"
#include "falo/tensor.hpp"
#include "falo/weights.hpp"

namespace falo {

// Same 6000 tokens of width 128, split into progressively more groups.
inline std::vector<Shape3> default_bench_shapes() {
  return {{1, 6000, 128}, {2, 3000, 128}, {4, 1500, 128},
          {10, 600, 128}, {20, 300, 128}, {60, 100, 128}};
}

// Reference NPU latency in ms for default_bench_shapes(), same order. Reported
// next to host timings for context only.
inline constexpr std::array<double, 6> kReferenceNpuLatencyMs{10.60, 9.53, 9.00, 8.40, 8.12, 7.99};

struct BenchSpec {
  std::vector<Shape3> shapes = default_bench_shapes();
  std::size_t repeats = 5;
  std::size_t warmup = 1;
  std::size_t kernel = 11;
  std::uint64_t seed = 7;

  void validate() const {
    if (repeats < 3) throw ConfigError("bench.repeats", "must be >= 3");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("bench.kernel", "must be odd");
    if (shapes.empty()) throw ConfigError("bench.shapes", "at least one shape required");
    for (const Shape3& s : shapes) {
      if (s.size() == 0) throw ConfigError("bench.shapes", "dimensions must be >= 1");
    }
  }
};

struct BenchRow {
  Shape3 shape;
  double median_ms = 0.0;
  double p10_ms = 0.0;
  double p90_ms = 0.0;
  std::uint64_t macs = 0;
};

// q in [0, 1]; `sorted` must be ascending and non-empty.
inline double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline BenchRow time_layer(const Shape3& shape, const ConvDotMixParams& params,
                           std::size_t warmup, std::size_t repeats, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  static_assert(clock::is_steady);
  params.check();
  if (shape.channels != params.dim()) {
    throw ShapeError("bench: shape " + to_string(shape) + " does not match layer width " +
                     std::to_string(params.dim()));
  }
  Tensor3 x(shape.batch, shape.tokens, shape.channels);
  SplitMix64 rng(seed);
  for (float& v : x.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));

  volatile float sink = 0.0f;
  for (std::size_t i = 0; i < warmup; ++i) sink = sink + convdotmix_tensor(x, params).values()[0];
  std::vector<double> ms;
  ms.reserve(repeats);
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto t0 = clock::now();
    const Tensor3 y = convdotmix_tensor(x, params);
    const auto t1 = clock::now();
    sink = sink + y.values()[0];
    if (t1 < t0) throw Error("bench: clock went backwards");
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(ms.begin(), ms.end());

  BenchRow row;
  row.shape = shape;
  row.median_ms = percentile(ms, 0.5);
  row.p10_ms = percentile(ms, 0.1);
  row.p90_ms = percentile(ms, 0.9);
  row.macs = convdotmix_flops(shape.batch, shape.tokens, shape.channels, params.kernel()).macs;
  return row;
}

// All shapes must share the layer width of `params`.
inline std::vector<BenchRow> bench_layer(const BenchSpec& spec, const ConvDotMixParams& params) {
  spec.validate();
  std::vector<BenchRow> rows;
  for (const Shape3& s : spec.shapes) {
    rows.push_back(time_layer(s, params, spec.warmup, spec.repeats, spec.seed));
  }
  return rows;
}

// Draws one random layer per distinct channel count from spec.seed.
inline std::vector<BenchRow> bench_layer(const BenchSpec& spec) {
  spec.validate();
  std::map<std::size_t, ConvDotMixParams> layers;
  std::vector<BenchRow> rows;
  for (const Shape3& s : spec.shapes) {
    auto it = layers.find(s.channels);
    if (it == layers.end()) {
      it = layers.emplace(s.channels, random_convdotmix_params(s.channels, spec.kernel, spec.seed))
               .first;
    }
    rows.push_back(time_layer(s, it->second, spec.warmup, spec.repeats, spec.seed));
  }
  return rows;
}

// Header `B,T,C,K,macs,median_ms,p10_ms,p90_ms`; milliseconds with 3 decimals.
inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows,
                            std::size_t kernel) {
  os << "B,T,C,K,macs,median_ms,p10_ms,p90_ms\n";
  char buf[64];
  for (const BenchRow& r : rows) {
    os << r.shape.batch << ',' << r.shape.tokens << ',' << r.shape.channels << ',' << kernel << ','
       << r.macs;
    for (double v : {r.median_ms, r.p10_ms, r.p90_ms}) {
      std::snprintf(buf, sizeof(buf), ",%.3f", v);
      os << buf;
    }
    os << '\n';
  }
}

// Full self-attention over T tokens of width C, per batch row:
//   projections (Q, K, V, output): 4 * B * T * C^2 MACs
//   mixing (scores Q K^T and weighted sum of V): 2 * B * T^2 * C MACs
inline FlopsReport attention_flops_reference(std::uint64_t batch, std::uint64_t tokens,
                                             std::uint64_t channels) {
  FlopsReport r;
  r.add("attention_projections", {4 * batch * tokens * channels * channels, 0, 0});
  r.add("attention_mixing", {2 * batch * tokens * tokens * channels, 0, 0});
  return r;
}

}  // namespace falo
