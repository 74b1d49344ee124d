#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "falo/error.hpp"

namespace falo {

// Oriented 3D box. Sizes are in meters and strictly positive; yaw in (-pi, pi].
struct Detection {
  std::int32_t class_id = 0;
  float score = 0.0f;
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float l = 0.0f;
  float w = 0.0f;
  float h = 0.0f;
  float yaw = 0.0f;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Fold an angle into (-pi, pi].
inline float wrap_angle(double a) {
  constexpr double kPi = 3.14159265358979323846;
  a = std::remainder(a, 2.0 * kPi);
  float f = static_cast<float>(a);
  if (f <= -static_cast<float>(kPi)) f = static_cast<float>(kPi);
  return f;
}

// Serialized as {"detections":[{"class_id":..,"score":..,"x":..,...,"yaw":..}]}
// with fields in that fixed order. Floats are written as the shortest decimal
// that round-trips, so read(write(d)) == d bit-exactly.
inline std::string detections_to_json(const std::vector<Detection>& dets) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const Detection& d = dets[i];
    for (float v : {d.score, d.x, d.y, d.z, d.l, d.w, d.h, d.yaw}) {
      if (!std::isfinite(v)) {
        throw FormatError("detection " + std::to_string(i) + ": non-finite field");
      }
    }
    nlohmann::ordered_json o;
    o["class_id"] = d.class_id;
    o["score"] = d.score;
    o["x"] = d.x;
    o["y"] = d.y;
    o["z"] = d.z;
    o["l"] = d.l;
    o["w"] = d.w;
    o["h"] = d.h;
    o["yaw"] = d.yaw;
    arr.push_back(std::move(o));
  }
  nlohmann::ordered_json root;
  root["detections"] = std::move(arr);
  return root.dump(2) + "\n";
}

inline std::vector<Detection> detections_from_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("detections JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("detections") || !root["detections"].is_array()) {
    throw FormatError("detections JSON: missing \"detections\" array");
  }
  std::vector<Detection> out;
  for (const auto& o : root["detections"]) {
    try {
      Detection d;
      d.class_id = o.at("class_id").get<std::int32_t>();
      d.score = o.at("score").get<float>();
      d.x = o.at("x").get<float>();
      d.y = o.at("y").get<float>();
      d.z = o.at("z").get<float>();
      d.l = o.at("l").get<float>();
      d.w = o.at("w").get<float>();
      d.h = o.at("h").get<float>();
      d.yaw = o.at("yaw").get<float>();
      out.push_back(d);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("detection " + std::to_string(out.size()) + ": " + e.what());
    }
  }
  return out;
}

inline void save_detections(const std::vector<Detection>& dets, const std::string& path) {
  const std::string text = detections_to_json(dets);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline std::vector<Detection> load_detections(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return detections_from_json(ss.str());
}

}  // namespace falo
