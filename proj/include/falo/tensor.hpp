#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "falo/error.hpp"

namespace falo {

struct Shape3 {
  std::size_t batch = 0;
  std::size_t tokens = 0;
  std::size_t channels = 0;

  std::size_t size() const noexcept { return batch * tokens * channels; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

inline std::string to_string(const Shape3& s) {
  return "[" + std::to_string(s.batch) + "," + std::to_string(s.tokens) + "," +
         std::to_string(s.channels) + "]";
}

// Dense row-major [batch, tokens, channels] float32 tensor.
class Tensor3 {
 public:
  Tensor3() = default;

  Tensor3(std::size_t batch, std::size_t tokens, std::size_t channels, float fill = 0.0f)
      : shape_{batch, tokens, channels}, data_(batch * tokens * channels, fill) {}

  Tensor3(Shape3 shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw ShapeError("Tensor3: data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
    }
  }

  const Shape3& shape() const noexcept { return shape_; }
  std::size_t batch() const noexcept { return shape_.batch; }
  std::size_t tokens() const noexcept { return shape_.tokens; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(std::size_t b, std::size_t t, std::size_t c) noexcept {
    return data_[(b * shape_.tokens + t) * shape_.channels + c];
  }
  float at(std::size_t b, std::size_t t, std::size_t c) const noexcept {
    return data_[(b * shape_.tokens + t) * shape_.channels + c];
  }

  std::span<float> row(std::size_t b, std::size_t t) noexcept {
    return {data_.data() + (b * shape_.tokens + t) * shape_.channels, shape_.channels};
  }
  std::span<const float> row(std::size_t b, std::size_t t) const noexcept {
    return {data_.data() + (b * shape_.tokens + t) * shape_.channels, shape_.channels};
  }

  // Row by flat token index b * tokens + t.
  std::span<float> flat_row(std::size_t i) noexcept {
    return {data_.data() + i * shape_.channels, shape_.channels};
  }
  std::span<const float> flat_row(std::size_t i) const noexcept {
    return {data_.data() + i * shape_.channels, shape_.channels};
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }
  const float* data() const noexcept { return data_.data(); }

  // Reinterpret the [batch * tokens] flat token axis; storage is untouched.
  void reshape(std::size_t batch, std::size_t tokens) {
    if (batch * tokens != shape_.batch * shape_.tokens) {
      throw ShapeError("Tensor3::reshape: " + to_string(shape_) + " cannot become [" +
                       std::to_string(batch) + "," + std::to_string(tokens) + "," +
                       std::to_string(shape_.channels) + "]");
    }
    shape_.batch = batch;
    shape_.tokens = tokens;
  }

  std::vector<float> release() && noexcept { return std::move(data_); }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  Shape3 shape_;
  std::vector<float> data_;
};

// Dense bird's-eye-view feature map, row-major [H, W, C].
class BEVGrid {
 public:
  BEVGrid() = default;
  BEVGrid(std::size_t height, std::size_t width, std::size_t channels, float fill = 0.0f)
      : height_(height), width_(width), channels_(channels),
        data_(height * width * channels, fill) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(std::size_t y, std::size_t x, std::size_t c) noexcept {
    return data_[(y * width_ + x) * channels_ + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return data_[(y * width_ + x) * channels_ + c];
  }

  std::span<float> cell(std::size_t y, std::size_t x) noexcept {
    return {data_.data() + (y * width_ + x) * channels_, channels_};
  }
  std::span<const float> cell(std::size_t y, std::size_t x) const noexcept {
    return {data_.data() + (y * width_ + x) * channels_, channels_};
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  friend bool operator==(const BEVGrid&, const BEVGrid&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<float> data_;
};

// Pillar cell index on the BEV grid.
struct GridCoord {
  std::uint32_t ix = 0;
  std::uint32_t iy = 0;

  friend auto operator<=>(const GridCoord&, const GridCoord&) = default;
};

// N tokens of width `dim` with one grid coordinate per token. Used both for
// encoder output (pillar order) and for the serialized sequence.
struct TokenSequence {
  std::size_t dim = 0;
  std::vector<float> features;  // size() * dim
  std::vector<GridCoord> coords;

  std::size_t size() const noexcept { return coords.size(); }

  std::span<float> token(std::size_t i) noexcept { return {features.data() + i * dim, dim}; }
  std::span<const float> token(std::size_t i) const noexcept {
    return {features.data() + i * dim, dim};
  }

  void check() const {
    if (features.size() != coords.size() * dim) {
      throw ShapeError("TokenSequence: " + std::to_string(features.size()) +
                       " features for " + std::to_string(coords.size()) + " tokens of width " +
                       std::to_string(dim));
    }
  }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

using VoxelFeatures = TokenSequence;

}  // namespace falo
