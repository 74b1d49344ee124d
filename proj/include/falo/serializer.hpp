#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "falo/error.hpp"
#include "falo/tensor.hpp"

namespace falo {

enum class AxisOrder { x_order, y_order, none };

struct SerializationConfig {
  std::size_t wx = 12;
  std::size_t wy = 12;
  AxisOrder axis = AxisOrder::y_order;

  void validate() const {
    if (wx < 1 || wy < 1) throw ConfigError("serialization.window", "window sides must be >= 1");
  }
};

// perm: sequence position -> pillar index; inv: pillar index -> sequence position.
struct SerializationOrder {
  std::vector<std::size_t> perm;
  std::vector<std::size_t> inv;

  std::size_t size() const noexcept { return perm.size(); }
};

namespace detail {
inline std::atomic<std::uint64_t>& build_order_counter() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}
}  // namespace detail

// Total build_order invocations in this process.
inline std::uint64_t build_order_calls() noexcept {
  return detail::build_order_counter().load(std::memory_order_relaxed);
}

// Windows are visited row-major (window row major, window column minor); inside
// a window x_order sorts by (iy, ix) and y_order by (ix, iy). AxisOrder::none
// keeps the incoming pillar order.
inline SerializationOrder build_order(std::span<const GridCoord> coords,
                                      const SerializationConfig& cfg) {
  cfg.validate();
  detail::build_order_counter().fetch_add(1, std::memory_order_relaxed);
  const std::size_t n = coords.size();

  {
    std::vector<GridCoord> sorted(coords.begin(), coords.end());
    std::sort(sorted.begin(), sorted.end());
    const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) {
      throw ShapeError("build_order: duplicate coordinate (ix=" + std::to_string(dup->ix) +
                       ", iy=" + std::to_string(dup->iy) + ")");
    }
  }

  SerializationOrder order;
  order.perm.resize(n);
  std::iota(order.perm.begin(), order.perm.end(), std::size_t{0});
  if (cfg.axis != AxisOrder::none) {
    struct Key {
      std::uint64_t window;
      std::uint64_t inner;
    };
    std::vector<Key> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
      const GridCoord c = coords[i];
      const std::uint64_t wy_idx = c.iy / cfg.wy;
      const std::uint64_t wx_idx = c.ix / cfg.wx;
      const std::uint64_t inner = cfg.axis == AxisOrder::x_order
                                      ? (static_cast<std::uint64_t>(c.iy) << 32) | c.ix
                                      : (static_cast<std::uint64_t>(c.ix) << 32) | c.iy;
      keys[i] = {(wy_idx << 32) | wx_idx, inner};
    }
    // Keys are unique because coords are, so plain sort is deterministic.
    std::sort(order.perm.begin(), order.perm.end(), [&](std::size_t a, std::size_t b) {
      return keys[a].window != keys[b].window ? keys[a].window < keys[b].window
                                              : keys[a].inner < keys[b].inner;
    });
  }
  order.inv.resize(n);
  for (std::size_t t = 0; t < n; ++t) order.inv[order.perm[t]] = t;
  return order;
}

// Token t of the result is feats[perm[t]].
inline TokenSequence apply_order(const VoxelFeatures& feats, const SerializationOrder& order) {
  feats.check();
  if (order.size() != feats.size()) {
    throw ShapeError("apply_order: order covers " + std::to_string(order.size()) +
                     " tokens, features have " + std::to_string(feats.size()));
  }
  TokenSequence seq;
  seq.dim = feats.dim;
  seq.coords.resize(feats.size());
  seq.features.resize(feats.features.size());
  for (std::size_t t = 0; t < order.size(); ++t) {
    const std::size_t src = order.perm[t];
    seq.coords[t] = feats.coords[src];
    const auto from = feats.token(src);
    std::copy(from.begin(), from.end(), seq.token(t).begin());
  }
  return seq;
}

// Inverse gather: pillar i of the result is seq[inv[i]].
inline VoxelFeatures unapply_order(const TokenSequence& seq, const SerializationOrder& order) {
  seq.check();
  if (order.size() != seq.size()) {
    throw ShapeError("unapply_order: order covers " + std::to_string(order.size()) +
                     " tokens, sequence has " + std::to_string(seq.size()));
  }
  VoxelFeatures out;
  out.dim = seq.dim;
  out.coords.resize(seq.size());
  out.features.resize(seq.features.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t src = order.inv[i];
    out.coords[i] = seq.coords[src];
    const auto from = seq.token(src);
    std::copy(from.begin(), from.end(), out.token(i).begin());
  }
  return out;
}

// BEV cell (iy, ix) receives its token's vector; every other cell stays zero.
inline BEVGrid scatter_to_bev(const TokenSequence& seq, std::size_t height, std::size_t width) {
  seq.check();
  BEVGrid grid(height, width, seq.dim);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const GridCoord c = seq.coords[t];
    if (c.ix >= width || c.iy >= height) {
      throw ShapeError("scatter_to_bev: coordinate (ix=" + std::to_string(c.ix) +
                       ", iy=" + std::to_string(c.iy) + ") outside " + std::to_string(height) +
                       "x" + std::to_string(width) + " grid");
    }
    const auto from = seq.token(t);
    std::copy(from.begin(), from.end(), grid.cell(c.iy, c.ix).begin());
  }
  return grid;
}

}  // namespace falo
