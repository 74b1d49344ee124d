#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "falo/detection.hpp"
#include "falo/error.hpp"
#include "falo/rng.hpp"

namespace falo {

struct Point {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float intensity = 0.0f;

  friend bool operator==(const Point&, const Point&) = default;
};

struct PointCloud {
  std::vector<Point> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

enum class PointFormat { bin_xyzi, csv };

// ".csv" selects CSV; anything else is treated as raw bin_xyzi.
inline PointFormat format_for_path(std::string_view path) {
  return path.size() >= 4 && path.substr(path.size() - 4) == ".csv" ? PointFormat::csv
                                                                     : PointFormat::bin_xyzi;
}

namespace detail {

inline void check_point(const Point& p, std::size_t row) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
      !std::isfinite(p.intensity)) {
    throw FormatError("row " + std::to_string(row) + ": non-finite value");
  }
  if (p.intensity < 0.0f || p.intensity > 1.0f) {
    throw FormatError("row " + std::to_string(row) + ": intensity outside [0, 1]");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("read failed for '" + path + "'");
  return bytes;
}

inline float load_le_f32(const char* p) noexcept {
  std::uint32_t u = 0;
  for (int i = 3; i >= 0; --i) u = (u << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<float>(u);
}

inline void store_le_f32(float v, std::string& out) {
  const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

inline std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline float parse_float(std::string_view s, std::size_t row) {
  s = trim(s);
  float v = 0.0f;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("row " + std::to_string(row) + ": cannot parse '" + std::string(s) + "'");
  }
  return v;
}

inline void append_float(std::string& out, float v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace detail

inline PointCloud decode_bin_xyzi(std::string_view bytes) {
  constexpr std::size_t kRecord = 16;
  if (bytes.size() % kRecord != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % kRecord;
    throw FormatError("truncated record at byte offset " + std::to_string(offset) + " (" +
                      std::to_string(bytes.size()) + " bytes is not a multiple of 16)");
  }
  PointCloud cloud;
  cloud.points.reserve(bytes.size() / kRecord);
  for (std::size_t row = 0; row < bytes.size() / kRecord; ++row) {
    const char* p = bytes.data() + row * kRecord;
    Point pt{detail::load_le_f32(p), detail::load_le_f32(p + 4), detail::load_le_f32(p + 8),
             detail::load_le_f32(p + 12)};
    detail::check_point(pt, row);
    cloud.points.push_back(pt);
  }
  return cloud;
}

// CSV: header `x,y,z,intensity`, one point per row. Row indices in errors count
// data rows from 0.
inline PointCloud decode_csv(std::string_view text) {
  PointCloud cloud;
  std::size_t pos = 0;
  bool header_seen = false;
  std::size_t row = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "x,y,z,intensity") {
        throw FormatError("CSV header must be 'x,y,z,intensity', got '" + std::string(line) + "'");
      }
      header_seen = true;
      continue;
    }
    float v[4];
    std::size_t field = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (field == 4) throw FormatError("row " + std::to_string(row) + ": expected 4 fields");
      v[field++] = detail::parse_float(line.substr(start, comma - start), row);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (field != 4) throw FormatError("row " + std::to_string(row) + ": expected 4 fields");
    Point pt{v[0], v[1], v[2], v[3]};
    detail::check_point(pt, row);
    cloud.points.push_back(pt);
    ++row;
  }
  if (!header_seen && !text.empty()) throw FormatError("CSV: missing header");
  return cloud;
}

inline PointCloud load_points(const std::string& path, PointFormat format) {
  const std::string bytes = detail::read_file(path);
  try {
    return format == PointFormat::csv ? decode_csv(bytes) : decode_bin_xyzi(bytes);
  } catch (const FormatError& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
}

inline PointCloud load_points(const std::string& path) {
  return load_points(path, format_for_path(path));
}

inline std::string encode_points(const PointCloud& cloud, PointFormat format) {
  std::string out;
  if (format == PointFormat::bin_xyzi) {
    out.reserve(cloud.size() * 16);
    for (const Point& p : cloud.points) {
      for (float v : {p.x, p.y, p.z, p.intensity}) detail::store_le_f32(v, out);
    }
    return out;
  }
  out = "x,y,z,intensity\n";
  for (const Point& p : cloud.points) {
    detail::append_float(out, p.x);
    out.push_back(',');
    detail::append_float(out, p.y);
    out.push_back(',');
    detail::append_float(out, p.z);
    out.push_back(',');
    detail::append_float(out, p.intensity);
    out.push_back('\n');
  }
  return out;
}

inline void save_points(const PointCloud& cloud, const std::string& path, PointFormat format) {
  const std::string bytes = encode_points(cloud, format);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline void save_points(const PointCloud& cloud, const std::string& path) {
  save_points(cloud, path, format_for_path(path));
}

// Axis-aligned point range in meters; cells are half-open [min, max).
struct PointRange {
  double x_min = 0.0, y_min = 0.0, z_min = 0.0;
  double x_max = 0.0, y_max = 0.0, z_max = 0.0;

  bool well_ordered() const noexcept {
    return x_min < x_max && y_min < y_max && z_min < z_max;
  }
  bool contains(const Point& p) const noexcept {
    return p.x >= x_min && p.x < x_max && p.y >= y_min && p.y < y_max && p.z >= z_min &&
           p.z < z_max;
  }
};

struct SceneSpec {
  std::uint64_t seed = 7;
  std::size_t num_clusters = 2;
  std::size_t points_per_cluster = 200;
  double box_l = 4.0, box_w = 2.0, box_h = 1.6;
  PointRange range{0.0, 0.0, -3.0, 19.2, 19.2, 5.0};
  std::size_t noise_points = 500;
  std::size_t num_classes = 3;

  void validate() const {
    if (!range.well_ordered()) throw ConfigError("scene.range", "min must be < max on every axis");
    if (num_clusters > 0) {
      if (!(box_l > 0.0 && box_w > 0.0 && box_h > 0.0)) {
        throw ConfigError("scene.cluster_box", "box dimensions must be positive");
      }
      const double radius = 0.5 * std::hypot(box_l, box_w);
      if (2.0 * radius >= range.x_max - range.x_min ||
          2.0 * radius >= range.y_max - range.y_min || box_h >= range.z_max - range.z_min) {
        throw ConfigError("scene.cluster_box", "box does not fit inside the range");
      }
      if (num_classes == 0) throw ConfigError("scene.num_classes", "must be >= 1");
    }
  }
};

struct SyntheticScene {
  PointCloud cloud;
  std::vector<Detection> boxes;  // ground truth, score 1
};

// Draw order from one SplitMix64(seed) stream:
//   per cluster: center x, center y, center z, yaw, then per point
//   (u, v, w, intensity) in the box frame;
//   then per noise point (x, y, z, intensity).
// Cluster i has class i mod num_classes. Cluster points are sampled from the
// box shrunk by 0.1% so the float-rounded point stays strictly inside.
inline SyntheticScene synth_scene(const SceneSpec& spec) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  SyntheticScene scene;
  const PointRange& r = spec.range;
  const auto clamp_below = [](double v, double hi) {
    float f = static_cast<float>(v);
    if (f >= hi) f = std::nextafter(static_cast<float>(hi), -INFINITY);
    return f;
  };

  constexpr double kPi = 3.14159265358979323846;
  const double radius = 0.5 * std::hypot(spec.box_l, spec.box_w);
  for (std::size_t i = 0; i < spec.num_clusters; ++i) {
    const double cx = rng.uniform(r.x_min + radius, r.x_max - radius);
    const double cy = rng.uniform(r.y_min + radius, r.y_max - radius);
    const double cz = rng.uniform(r.z_min + 0.5 * spec.box_h, r.z_max - 0.5 * spec.box_h);
    const double yaw = kPi - 2.0 * kPi * rng.uniform01();  // (-pi, pi]

    Detection box;
    box.class_id = static_cast<std::int32_t>(i % spec.num_classes);
    box.score = 1.0f;
    box.x = static_cast<float>(cx);
    box.y = static_cast<float>(cy);
    box.z = static_cast<float>(cz);
    box.l = static_cast<float>(spec.box_l);
    box.w = static_cast<float>(spec.box_w);
    box.h = static_cast<float>(spec.box_h);
    box.yaw = static_cast<float>(yaw);
    scene.boxes.push_back(box);

    const double c = std::cos(yaw), s = std::sin(yaw);
    constexpr double kShrink = 0.999;
    for (std::size_t k = 0; k < spec.points_per_cluster; ++k) {
      const double u = (rng.uniform01() - 0.5) * spec.box_l * kShrink;
      const double v = (rng.uniform01() - 0.5) * spec.box_w * kShrink;
      const double w = (rng.uniform01() - 0.5) * spec.box_h * kShrink;
      const float intensity = static_cast<float>(rng.uniform01());
      scene.cloud.points.push_back(Point{static_cast<float>(cx + c * u - s * v),
                                         static_cast<float>(cy + s * u + c * v),
                                         static_cast<float>(cz + w), intensity});
    }
  }
  for (std::size_t k = 0; k < spec.noise_points; ++k) {
    const float x = clamp_below(rng.uniform(r.x_min, r.x_max), r.x_max);
    const float y = clamp_below(rng.uniform(r.y_min, r.y_max), r.y_max);
    const float z = clamp_below(rng.uniform(r.z_min, r.z_max), r.z_max);
    const float intensity = static_cast<float>(rng.uniform01());
    scene.cloud.points.push_back(Point{x, y, z, intensity});
  }
  return scene;
}

// Box-frame coordinates of p relative to box b (for containment checks).
inline void to_box_frame(const Detection& b, const Point& p, double& u, double& v, double& w) {
  const double dx = static_cast<double>(p.x) - b.x;
  const double dy = static_cast<double>(p.y) - b.y;
  const double c = std::cos(static_cast<double>(b.yaw)), s = std::sin(static_cast<double>(b.yaw));
  u = c * dx + s * dy;
  v = -s * dx + c * dy;
  w = static_cast<double>(p.z) - b.z;
}

}  // namespace falo
