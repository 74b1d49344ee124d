#pragma once

// Property checkers shared by the unit tests and the acceptance binary.

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "falo/falo.hpp"

namespace props {

// Returns the number of violated properties of `order` over `coords`:
// bijection, window contiguity and within-window key order.
inline std::size_t serialization_violations(const std::vector<falo::GridCoord>& coords,
                                            const falo::SerializationConfig& cfg,
                                            const falo::SerializationOrder& order) {
  const std::size_t n = coords.size();
  std::size_t bad = 0;
  if (order.perm.size() != n || order.inv.size() != n) return 1;
  std::vector<char> seen(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    if (order.perm[t] >= n || seen[order.perm[t]]) {
      ++bad;
      continue;
    }
    seen[order.perm[t]] = 1;
    if (order.inv[order.perm[t]] != t) ++bad;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (order.inv[i] >= n || order.perm[order.inv[i]] != i) ++bad;
  }
  if (bad) return bad;
  if (cfg.axis == falo::AxisOrder::none) {
    for (std::size_t t = 0; t < n; ++t) bad += order.perm[t] != t;
    return bad;
  }

  const auto window = [&](falo::GridCoord c) {
    return std::make_pair(c.iy / cfg.wy, c.ix / cfg.wx);
  };
  const auto inner = [&](falo::GridCoord c) {
    return cfg.axis == falo::AxisOrder::x_order ? std::make_pair(c.iy, c.ix)
                                                : std::make_pair(c.ix, c.iy);
  };
  // Contiguity: positions of each window span exactly count-many slots.
  std::map<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>> span;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> count;
  for (std::size_t t = 0; t < n; ++t) {
    const auto w = window(coords[order.perm[t]]);
    auto [it, fresh] = span.try_emplace(w, t, t);
    if (!fresh) it->second.second = t;
    ++count[w];
  }
  for (const auto& [w, s] : span) bad += (s.second - s.first + 1) != count[w];
  // Windows in row-major order, keys strictly increasing inside a window.
  for (std::size_t t = 1; t < n; ++t) {
    const auto a = coords[order.perm[t - 1]], b = coords[order.perm[t]];
    if (window(a) > window(b)) ++bad;
    if (window(a) == window(b) && !(inner(a) < inner(b))) ++bad;
  }
  return bad;
}

inline bool bit_equal(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

// Dense grid with the given coords filled by `seq` values, built without the
// library scatter.
inline falo::BEVGrid dense_from(const falo::TokenSequence& seq, std::size_t h, std::size_t w) {
  falo::BEVGrid g(h, w, seq.dim);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t c = 0; c < seq.dim; ++c) {
      g.at(seq.coords[i].iy, seq.coords[i].ix, c) = seq.features[i * seq.dim + c];
    }
  }
  return g;
}

// Counts nonzero floats in the pad tail of `g`.
inline std::size_t nonzero_pads(const falo::GroupedTokens& g) {
  const auto v = g.tokens.values();
  std::size_t bad = 0;
  for (std::size_t i = g.valid_n * g.tokens.channels(); i < v.size(); ++i) {
    bad += !(v[i] == 0.0f && !std::signbit(v[i]));
  }
  return bad;
}

}  // namespace props
