#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "falo/error.hpp"
#include "falo/flops.hpp"
#include "falo/kernels.hpp"
#include "falo/scene_io.hpp"
#include "falo/tensor.hpp"

namespace falo {

inline constexpr std::size_t kPointFeatures = 9;

// Number of cells of width `size` covering `extent`, i.e. ceil(extent / size)
// with exact multiples (up to rounding of the decimal inputs) not rounded up.
inline std::size_t cell_count(double extent, double size) {
  const double q = extent / size;
  const double n = std::round(q);
  if (std::abs(q - n) <= 1e-9 * std::max(1.0, n)) return static_cast<std::size_t>(n);
  return static_cast<std::size_t>(std::ceil(q));
}

struct VoxelGridConfig {
  PointRange range{-54.0, -54.0, -5.0, 54.0, 54.0, 3.0};
  double sx = 0.3;
  double sy = 0.3;
  double sz = 8.0;
  std::size_t max_points_per_pillar = 20;
  std::size_t feature_dim = 128;

  std::size_t grid_w() const { return cell_count(range.x_max - range.x_min, sx); }
  std::size_t grid_h() const { return cell_count(range.y_max - range.y_min, sy); }

  void validate() const {
    if (!range.well_ordered()) throw ConfigError("voxel.range", "min must be < max on every axis");
    if (!(sx > 0.0 && sy > 0.0 && sz > 0.0)) {
      throw ConfigError("voxel.pillar_size", "all sizes must be positive");
    }
    if (max_points_per_pillar < 1) {
      throw ConfigError("voxel.max_points_per_pillar", "must be >= 1");
    }
    if (feature_dim < 1) throw ConfigError("voxel.feature_dim", "must be >= 1");
    if (grid_w() > std::numeric_limits<std::uint32_t>::max() ||
        grid_h() > std::numeric_limits<std::uint32_t>::max()) {
      throw ConfigError("voxel.pillar_size", "grid too large");
    }
  }
};

// Non-empty pillars in order of first occupancy (i.e. sensor order of the
// earliest point that landed in each pillar).
struct PillarSet {
  std::vector<GridCoord> coords;
  std::vector<std::vector<Point>> points;  // raw points, earliest first, never empty

  std::size_t size() const noexcept { return coords.size(); }
};

inline PillarSet assign_pillars(const PointCloud& cloud, const VoxelGridConfig& cfg) {
  cfg.validate();
  const std::size_t W = cfg.grid_w();
  const std::size_t H = cfg.grid_h();
  PillarSet set;
  std::unordered_map<std::uint64_t, std::size_t> index;
  for (const Point& p : cloud.points) {
    if (!cfg.range.contains(p)) continue;
    const double fx = std::floor((static_cast<double>(p.x) - cfg.range.x_min) / cfg.sx);
    const double fy = std::floor((static_cast<double>(p.y) - cfg.range.y_min) / cfg.sy);
    if (fx < 0.0 || fy < 0.0 || fx >= static_cast<double>(W) || fy >= static_cast<double>(H)) {
      continue;
    }
    const GridCoord c{static_cast<std::uint32_t>(fx), static_cast<std::uint32_t>(fy)};
    const std::uint64_t key = (static_cast<std::uint64_t>(c.iy) << 32) | c.ix;
    auto [it, inserted] = index.try_emplace(key, set.coords.size());
    if (inserted) {
      set.coords.push_back(c);
      set.points.emplace_back();
    }
    auto& buf = set.points[it->second];
    if (buf.size() < cfg.max_points_per_pillar) buf.push_back(p);
  }
  return set;
}

struct EncoderParams {
  LinearParams linear;  // kPointFeatures -> feature_dim
};

// The 9 per-point features: x, y, z, intensity, offsets from the pillar's
// point centroid (3), offsets from the pillar cell center in x and y (2).
inline void augment_pillar(const std::vector<Point>& pts, GridCoord c,
                           const VoxelGridConfig& cfg, std::span<float> out) {
  double mx = 0.0, my = 0.0, mz = 0.0;
  for (const Point& p : pts) {
    mx += p.x;
    my += p.y;
    mz += p.z;
  }
  const double n = static_cast<double>(pts.size());
  mx /= n;
  my /= n;
  mz /= n;
  const double cx = cfg.range.x_min + (c.ix + 0.5) * cfg.sx;
  const double cy = cfg.range.y_min + (c.iy + 0.5) * cfg.sy;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point& p = pts[i];
    float* f = out.data() + i * kPointFeatures;
    f[0] = p.x;
    f[1] = p.y;
    f[2] = p.z;
    f[3] = p.intensity;
    f[4] = static_cast<float>(p.x - mx);
    f[5] = static_cast<float>(p.y - my);
    f[6] = static_cast<float>(p.z - mz);
    f[7] = static_cast<float>(p.x - cx);
    f[8] = static_cast<float>(p.y - cy);
  }
}

// Per-point linear + GELU, then max-pool over each pillar's points.
inline VoxelFeatures encode_pillars(const PillarSet& pillars, const VoxelGridConfig& cfg,
                                    const EncoderParams& params) {
  const LinearParams& lin = params.linear;
  lin.check();
  if (lin.in_dim != kPointFeatures) {
    throw ShapeError("encode_pillars: encoder expects " + std::to_string(lin.in_dim) +
                     " inputs, points carry " + std::to_string(kPointFeatures));
  }
  if (pillars.points.size() != pillars.coords.size()) {
    throw ShapeError("encode_pillars: coords/buffers length mismatch");
  }
  std::size_t total = 0;
  for (const auto& buf : pillars.points) {
    if (buf.empty()) throw ShapeError("encode_pillars: empty pillar buffer");
    total += buf.size();
  }

  Tensor3 feats(1, total, kPointFeatures);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < pillars.size(); ++i) {
    const auto& buf = pillars.points[i];
    augment_pillar(buf, pillars.coords[i], cfg,
                   feats.values().subspan(offset * kPointFeatures, buf.size() * kPointFeatures));
    offset += buf.size();
  }
  Tensor3 act = gelu(linear(feats, lin));

  VoxelFeatures out;
  out.dim = lin.out_dim;
  out.coords = pillars.coords;
  out.features.assign(pillars.size() * out.dim, 0.0f);
  offset = 0;
  for (std::size_t i = 0; i < pillars.size(); ++i) {
    auto dst = out.token(i);
    const auto first = act.flat_row(offset);
    std::copy(first.begin(), first.end(), dst.begin());
    for (std::size_t k = 1; k < pillars.points[i].size(); ++k) {
      const auto r = act.flat_row(offset + k);
      for (std::size_t d = 0; d < out.dim; ++d) dst[d] = std::max(dst[d], r[d]);
    }
    offset += pillars.points[i].size();
  }
  return out;
}

inline FlopsReport encoder_flops(const PillarSet& pillars, std::size_t feature_dim) {
  std::uint64_t pts = 0;
  for (const auto& b : pillars.points) pts += b.size();
  FlopsReport r;
  r.add("linear", count_op(op::Linear{1, pts, kPointFeatures, feature_dim}));
  r.add("gelu", count_op(op::Gelu{pts * feature_dim}));
  return r;
}

}  // namespace falo
