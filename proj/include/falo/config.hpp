#pragma once

// Pipeline configuration, read from a JSON document:
//
//   {
//     "seed": 7,
//     "voxel": {"range": [x_min, y_min, z_min, x_max, y_max, z_max],
//               "pillar_size": [sx, sy, sz], "max_points_per_pillar": 20,
//               "feature_dim": 128},
//     "serialization": {"window": [wx, wy], "axis_order": "x" | "y" | "none"},
//     "backbone": {"layers": 8, "dim": 128, "kernel": 11,
//                  "schedule_kind": "none" | "constant" | "increasing" | "decreasing",
//                  "schedule": [128, 128, 256, ...]},
//     "bev": {"stage_blocks": [2, 3, 3], "base_channels": 64, "fused_channels": 128},
//     "head": {"num_classes": 3, "hidden_channels": 64, "score_thresh": 0.1, "top_k": 100}
//   }
//
// Unknown keys are rejected. Every error is a ConfigError naming the field.

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "falo/backbone3d.hpp"
#include "falo/bev_backbone.hpp"
#include "falo/error.hpp"
#include "falo/serializer.hpp"
#include "falo/voxelizer.hpp"

namespace falo {

struct BackboneConfig {
  std::size_t layers = 8;
  std::size_t dim = 128;
  std::size_t kernel = 11;
  GroupSchedule schedule;
};

struct HeadConfig {
  std::size_t num_classes = 3;
  std::size_t hidden_channels = 64;
  float score_thresh = 0.1f;
  std::size_t top_k = 100;
};

struct PipelineConfig {
  std::uint64_t seed = 7;
  VoxelGridConfig voxel;
  SerializationConfig serial;
  BackboneConfig backbone;
  BEVConfig bev;
  HeadConfig head;

  void validate() const {
    voxel.validate();
    if (voxel.grid_w() % 4 != 0 || voxel.grid_h() % 4 != 0) {
      throw ConfigError("voxel.range", "grid " + std::to_string(voxel.grid_w()) + "x" +
                                           std::to_string(voxel.grid_h()) +
                                           " must be divisible by 4 for the BEV backbone");
    }
    serial.validate();
    if (backbone.layers < 1) throw ConfigError("backbone.layers", "must be >= 1");
    if (backbone.kernel < 1 || backbone.kernel % 2 == 0) {
      throw ConfigError("backbone.kernel", "must be a positive odd number");
    }
    if (backbone.dim != voxel.feature_dim) {
      throw ConfigError("backbone.dim", "must equal voxel.feature_dim (" +
                                            std::to_string(voxel.feature_dim) + ")");
    }
    if (backbone.schedule.layers() != backbone.layers) {
      throw ConfigError("backbone.schedule",
                        "has " + std::to_string(backbone.schedule.layers()) + " entries for " +
                            std::to_string(backbone.layers) + " layers");
    }
    backbone.schedule.validate();
    const std::size_t m = backbone.schedule.pad_multiple();
    for (std::size_t l = 0; l < backbone.layers; ++l) {
      const std::size_t k = backbone.schedule.group_size(l, m);
      if (m % k != 0) throw ConfigError("backbone.schedule", "sizes must divide their lcm");
    }
    bev.validate();
    if (head.num_classes < 1) throw ConfigError("head.num_classes", "must be >= 1");
    if (head.hidden_channels < 1) throw ConfigError("head.hidden_channels", "must be >= 1");
    if (!(head.score_thresh >= 0.0f && head.score_thresh <= 1.0f)) {
      throw ConfigError("head.score_thresh", "must lie in [0, 1]");
    }
  }
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
  }
}

inline const json& section(const json& root, const char* name) {
  if (!root.contains(name)) throw ConfigError(name, "missing section");
  const json& s = root.at(name);
  if (!s.is_object()) throw ConfigError(name, "must be an object");
  return s;
}

template <typename T>
T field(const json& obj, const std::string& where, const char* key, const T& fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key, "has the wrong type");
  }
}

inline std::size_t count_field(const json& obj, const std::string& where, const char* key,
                               std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(where + "." + key, "must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

inline std::vector<double> numbers(const json& obj, const std::string& where, const char* key,
                                   std::size_t expected) {
  const std::string name = where + "." + key;
  if (!obj.contains(key)) throw ConfigError(name, "missing");
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != expected) {
    throw ConfigError(name, "must be an array of " + std::to_string(expected) + " numbers");
  }
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw ConfigError(name, "must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline std::vector<std::size_t> counts(const json& v, const std::string& name) {
  if (!v.is_array()) throw ConfigError(name, "must be an array of non-negative integers");
  std::vector<std::size_t> out;
  for (const json& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
      throw ConfigError(name, "must contain only non-negative integers");
    }
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& root) {
  using detail::count_field;
  using detail::counts;
  using detail::field;
  using detail::numbers;
  using detail::section;
  if (!root.is_object()) throw ConfigError("config", "top level must be an object");
  detail::reject_unknown(root, "", {"seed", "voxel", "serialization", "backbone", "bev", "head"});

  PipelineConfig cfg;
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }

  {
    const auto& v = section(root, "voxel");
    detail::reject_unknown(v, "voxel",
                           {"range", "pillar_size", "max_points_per_pillar", "feature_dim"});
    const auto r = numbers(v, "voxel", "range", 6);
    cfg.voxel.range = {r[0], r[1], r[2], r[3], r[4], r[5]};
    const auto p = numbers(v, "voxel", "pillar_size", 3);
    cfg.voxel.sx = p[0];
    cfg.voxel.sy = p[1];
    cfg.voxel.sz = p[2];
    cfg.voxel.max_points_per_pillar =
        count_field(v, "voxel", "max_points_per_pillar", cfg.voxel.max_points_per_pillar);
    cfg.voxel.feature_dim = count_field(v, "voxel", "feature_dim", cfg.voxel.feature_dim);
  }
  {
    const auto& s = section(root, "serialization");
    detail::reject_unknown(s, "serialization", {"window", "axis_order"});
    const auto w = numbers(s, "serialization", "window", 2);
    for (double e : w) {
      if (e < 1 || e != static_cast<double>(static_cast<std::size_t>(e))) {
        throw ConfigError("serialization.window", "must be two positive integers");
      }
    }
    cfg.serial.wx = static_cast<std::size_t>(w[0]);
    cfg.serial.wy = static_cast<std::size_t>(w[1]);
    const auto axis = field<std::string>(s, "serialization", "axis_order", "y");
    if (axis == "x") cfg.serial.axis = AxisOrder::x_order;
    else if (axis == "y") cfg.serial.axis = AxisOrder::y_order;
    else if (axis == "none") cfg.serial.axis = AxisOrder::none;
    else throw ConfigError("serialization.axis_order", "must be one of x, y, none");
  }
  {
    const auto& b = section(root, "backbone");
    detail::reject_unknown(b, "backbone", {"layers", "dim", "kernel", "schedule_kind", "schedule"});
    cfg.backbone.layers = count_field(b, "backbone", "layers", cfg.backbone.layers);
    cfg.backbone.dim = count_field(b, "backbone", "dim", cfg.voxel.feature_dim);
    cfg.backbone.kernel = count_field(b, "backbone", "kernel", cfg.backbone.kernel);
    const auto kind = field<std::string>(b, "backbone", "schedule_kind", "increasing");
    if (kind == "none") {
      cfg.backbone.schedule = GroupSchedule::whole_sequence(cfg.backbone.layers);
    } else {
      GroupSchedule s;
      if (kind == "constant") s.kind = ScheduleKind::constant;
      else if (kind == "increasing") s.kind = ScheduleKind::increasing;
      else if (kind == "decreasing") s.kind = ScheduleKind::decreasing;
      else throw ConfigError("backbone.schedule_kind",
                             "must be one of none, constant, increasing, decreasing");
      if (!b.contains("schedule")) throw ConfigError("backbone.schedule", "missing");
      s.sizes = counts(b.at("schedule"), "backbone.schedule");
      cfg.backbone.schedule = std::move(s);
    }
  }
  {
    const auto& v = section(root, "bev");
    detail::reject_unknown(v, "bev", {"stage_blocks", "base_channels", "fused_channels"});
    if (!v.contains("stage_blocks")) throw ConfigError("bev.stage_blocks", "missing");
    const auto blocks = counts(v.at("stage_blocks"), "bev.stage_blocks");
    if (blocks.size() != kBevStages) {
      throw ConfigError("bev.stage_blocks", "must list exactly 3 stages");
    }
    for (std::size_t s = 0; s < kBevStages; ++s) cfg.bev.stage_blocks[s] = blocks[s];
    cfg.bev.base_channels = count_field(v, "bev", "base_channels", cfg.bev.base_channels);
    cfg.bev.fused_channels = count_field(v, "bev", "fused_channels", cfg.bev.fused_channels);
  }
  {
    const auto& h = section(root, "head");
    detail::reject_unknown(h, "head", {"num_classes", "hidden_channels", "score_thresh", "top_k"});
    cfg.head.num_classes = count_field(h, "head", "num_classes", cfg.head.num_classes);
    cfg.head.hidden_channels = count_field(h, "head", "hidden_channels", cfg.head.hidden_channels);
    cfg.head.score_thresh = field<float>(h, "head", "score_thresh", cfg.head.score_thresh);
    cfg.head.top_k = count_field(h, "head", "top_k", cfg.head.top_k);
  }
  cfg.validate();
  return cfg;
}

inline PipelineConfig parse_config_text(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(root);
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

}  // namespace falo
