#pragma once

// Named float32 tensors and their on-disk container.
//
// File layout (all integers little-endian):
//   bytes [0, 8)      magic "FALOWT01"
//   bytes [8, 16)     uint64 manifest length M
//   bytes [16, 16+M)  UTF-8 JSON manifest:
//                       {"format":"falo-weights","version":1,
//                        "tensors":[{"name":..,"shape":[..],"offset":..,"bytes":..},...],
//                        "data_bytes":..,"checksum":"fnv1a64:<16 hex digits>"}
//   bytes [16+M, ...) data blob; tensor offsets are relative to its start and
//                     each tensor is raw little-endian float32, row-major.
// The checksum is FNV-1a 64 over the data blob. Tensors are written in name order.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "falo/backbone3d.hpp"
#include "falo/conv2d.hpp"
#include "falo/error.hpp"
#include "falo/kernels.hpp"
#include "falo/rng.hpp"

namespace falo {

struct NamedTensor {
  std::vector<std::size_t> shape;
  std::vector<float> values;

  std::size_t numel() const noexcept {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

using WeightStore = std::map<std::string, NamedTensor>;

inline constexpr std::string_view kWeightMagic = "FALOWT01";

namespace detail {

inline std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

inline std::string encode_weights(const WeightStore& store) {
  std::string blob;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  for (const auto& [name, t] : store) {
    if (t.values.size() != t.numel()) {
      throw ShapeError("weight '" + name + "': " + std::to_string(t.values.size()) +
                       " values for shape " + detail::shape_string(t.shape));
    }
    nlohmann::ordered_json e;
    e["name"] = name;
    e["shape"] = t.shape;
    e["offset"] = blob.size();
    e["bytes"] = t.values.size() * 4;
    tensors.push_back(std::move(e));
    for (float v : t.values) {
      const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
      for (int i = 0; i < 4; ++i) blob.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
    }
  }
  nlohmann::ordered_json manifest;
  manifest["format"] = "falo-weights";
  manifest["version"] = 1;
  manifest["tensors"] = std::move(tensors);
  manifest["data_bytes"] = blob.size();
  manifest["checksum"] =
      "fnv1a64:" + detail::hex64(fnv1a64(std::as_bytes(std::span(blob.data(), blob.size()))));
  const std::string text = manifest.dump();

  std::string out(kWeightMagic);
  const std::uint64_t m = text.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((m >> (8 * i)) & 0xFF));
  out += text;
  out += blob;
  return out;
}

inline WeightStore decode_weights(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 8) != kWeightMagic) {
    throw FormatError("weight file: bad magic");
  }
  std::uint64_t m = 0;
  for (int i = 7; i >= 0; --i) m = (m << 8) | static_cast<unsigned char>(bytes[8 + i]);
  if (m > bytes.size() - 16) throw FormatError("weight file: manifest length exceeds file size");
  const std::string_view blob = bytes.substr(16 + m);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(16, m));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("weight file: manifest: ") + e.what());
  }
  WeightStore store;
  try {
    if (manifest.at("format").get<std::string>() != "falo-weights") {
      throw FormatError("weight file: unknown format tag");
    }
    if (manifest.at("data_bytes").get<std::uint64_t>() != blob.size()) {
      throw FormatError("weight file: data blob is " + std::to_string(blob.size()) +
                        " bytes, manifest says " +
                        std::to_string(manifest.at("data_bytes").get<std::uint64_t>()));
    }
    const std::string expected =
        "fnv1a64:" + detail::hex64(fnv1a64(std::as_bytes(std::span(blob.data(), blob.size()))));
    if (manifest.at("checksum").get<std::string>() != expected) {
      throw FormatError("weight file: checksum mismatch");
    }
    for (const auto& e : manifest.at("tensors")) {
      const std::string name = e.at("name").get<std::string>();
      NamedTensor t;
      t.shape = e.at("shape").get<std::vector<std::size_t>>();
      const std::uint64_t offset = e.at("offset").get<std::uint64_t>();
      const std::uint64_t nbytes = e.at("bytes").get<std::uint64_t>();
      if (nbytes != t.numel() * 4) {
        throw FormatError("weight '" + name + "': byte length does not match shape " +
                          detail::shape_string(t.shape));
      }
      if (offset > blob.size() || nbytes > blob.size() - offset) {
        throw FormatError("weight '" + name + "': extends past the data blob");
      }
      t.values.resize(t.numel());
      for (std::size_t i = 0; i < t.values.size(); ++i) {
        const char* p = blob.data() + offset + 4 * i;
        std::uint32_t u = 0;
        for (int b = 3; b >= 0; --b) u = (u << 8) | static_cast<unsigned char>(p[b]);
        t.values[i] = std::bit_cast<float>(u);
      }
      if (!store.emplace(name, std::move(t)).second) {
        throw FormatError("weight file: duplicate tensor '" + name + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight file: manifest: ") + e.what());
  }
  return store;
}

inline void write_weight_file(const WeightStore& store, const std::string& path) {
  const std::string bytes = encode_weights(store);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline WeightStore read_weight_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return decode_weights(bytes);
  } catch (const FormatError& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Parameter layout: canonical names, shapes and initialization.

enum class Init { fan_in_uniform, ones, zeros };

struct ParamSpec {
  std::string name;
  std::vector<std::size_t> shape;
  Init init = Init::fan_in_uniform;
  std::size_t fan_in = 1;
};

using ParamLayout = std::vector<ParamSpec>;

inline void layout_linear(ParamLayout& out, const std::string& w, const std::string& b,
                          std::size_t in, std::size_t o) {
  out.push_back({w, {in, o}, Init::fan_in_uniform, in});
  out.push_back({b, {o}, Init::fan_in_uniform, in});
}

inline void layout_norm(ParamLayout& out, const std::string& prefix, std::size_t dim) {
  out.push_back({prefix + ".gamma", {dim}, Init::ones, 1});
  out.push_back({prefix + ".beta", {dim}, Init::zeros, 1});
}

inline void layout_conv2d(ParamLayout& out, const std::string& prefix, std::size_t k,
                          std::size_t in, std::size_t o) {
  out.push_back({prefix + ".w", {k, k, in, o}, Init::fan_in_uniform, k * k * in});
  out.push_back({prefix + ".b", {o}, Init::fan_in_uniform, k * k * in});
}

inline void layout_convdotmix(ParamLayout& out, const std::string& p, std::size_t dim,
                              std::size_t kernel) {
  const std::size_t hidden = kFfnExpansion * dim;
  layout_norm(out, p + ".norm1", dim);
  layout_linear(out, p + ".w_a1", p + ".b_a1", dim, dim);
  out.push_back({p + ".dw_kernel", {dim, kernel}, Init::fan_in_uniform, kernel});
  out.push_back({p + ".dw_bias", {dim}, Init::fan_in_uniform, kernel});
  layout_linear(out, p + ".w_b", p + ".b_b", dim, dim);
  layout_linear(out, p + ".w_out", p + ".b_out", dim, dim);
  layout_norm(out, p + ".norm2", dim);
  layout_linear(out, p + ".w_ffn1", p + ".b_ffn1", dim, hidden);
  layout_linear(out, p + ".w_ffn2", p + ".b_ffn2", hidden, dim);
}

// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); norm gamma = 1,
// beta = 0. Each tensor draws from its own SplitMix64 stream seeded with
// seed ^ fnv1a64(name), so a tensor's values depend only on (seed, name, shape).
inline WeightStore random_weights(const ParamLayout& layout, std::uint64_t seed) {
  WeightStore store;
  for (const ParamSpec& spec : layout) {
    NamedTensor t;
    t.shape = spec.shape;
    t.values.resize(t.numel());
    switch (spec.init) {
      case Init::ones: std::fill(t.values.begin(), t.values.end(), 1.0f); break;
      case Init::zeros: break;
      case Init::fan_in_uniform: {
        SplitMix64 rng(seed ^ fnv1a64(spec.name));
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        for (float& v : t.values) v = static_cast<float>(rng.uniform(-bound, bound));
        break;
      }
    }
    store.emplace(spec.name, std::move(t));
  }
  return store;
}

inline void check_layout(const WeightStore& store, const ParamLayout& layout) {
  for (const ParamSpec& spec : layout) {
    const auto it = store.find(spec.name);
    if (it == store.end()) throw FormatError("missing tensor '" + spec.name + "'");
    if (it->second.shape != spec.shape) {
      throw FormatError("tensor '" + spec.name + "' has shape " +
                        detail::shape_string(it->second.shape) + ", expected " +
                        detail::shape_string(spec.shape));
    }
  }
}

// ---------------------------------------------------------------------------
// Extraction into kernel parameter structs.

inline const std::vector<float>& take(const WeightStore& store, const std::string& name,
                                      const std::vector<std::size_t>& shape) {
  const auto it = store.find(name);
  if (it == store.end()) throw FormatError("missing tensor '" + name + "'");
  if (it->second.shape != shape) {
    throw FormatError("tensor '" + name + "' has shape " + detail::shape_string(it->second.shape) +
                      ", expected " + detail::shape_string(shape));
  }
  return it->second.values;
}

inline LinearParams take_linear(const WeightStore& s, const std::string& w, const std::string& b,
                                std::size_t in, std::size_t o) {
  return {in, o, take(s, w, {in, o}), take(s, b, {o})};
}

inline NormParams take_norm(const WeightStore& s, const std::string& prefix, std::size_t dim) {
  return {take(s, prefix + ".gamma", {dim}), take(s, prefix + ".beta", {dim})};
}

inline Conv2dParams take_conv2d(const WeightStore& s, const std::string& prefix, std::size_t k,
                                std::size_t in, std::size_t o) {
  return {k, in, o, take(s, prefix + ".w", {k, k, in, o}), take(s, prefix + ".b", {o})};
}

inline ConvDotMixParams take_convdotmix(const WeightStore& s, const std::string& p,
                                        std::size_t dim, std::size_t kernel) {
  const std::size_t hidden = kFfnExpansion * dim;
  ConvDotMixParams out;
  out.norm1 = take_norm(s, p + ".norm1", dim);
  out.w_a1 = take_linear(s, p + ".w_a1", p + ".b_a1", dim, dim);
  out.dw = {dim, kernel, take(s, p + ".dw_kernel", {dim, kernel}), take(s, p + ".dw_bias", {dim})};
  out.w_b = take_linear(s, p + ".w_b", p + ".b_b", dim, dim);
  out.w_out = take_linear(s, p + ".w_out", p + ".b_out", dim, dim);
  out.norm2 = take_norm(s, p + ".norm2", dim);
  out.w_ffn1 = take_linear(s, p + ".w_ffn1", p + ".b_ffn1", dim, hidden);
  out.w_ffn2 = take_linear(s, p + ".w_ffn2", p + ".b_ffn2", hidden, dim);
  return out;
}

// A single randomly initialized ConvDotMix layer, named "layer".
inline ConvDotMixParams random_convdotmix_params(std::size_t dim, std::size_t kernel,
                                                 std::uint64_t seed) {
  ParamLayout layout;
  layout_convdotmix(layout, "layer", dim, kernel);
  return take_convdotmix(random_weights(layout, seed), "layer", dim, kernel);
}

}  // namespace falo
