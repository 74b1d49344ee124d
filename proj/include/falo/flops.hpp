#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

namespace falo {

// Analytic operation counts. One MAC is reported as 2 FLOPs; standalone
// multiplies (Hadamard) and additions-equivalents (norms, activations,
// residual adds) count 1 FLOP each.
struct OpCount {
  std::uint64_t macs = 0;
  std::uint64_t muls = 0;
  std::uint64_t adds = 0;

  OpCount& operator+=(const OpCount& o) noexcept {
    macs += o.macs;
    muls += o.muls;
    adds += o.adds;
    return *this;
  }
  friend bool operator==(const OpCount&, const OpCount&) = default;
};

struct FlopsReport {
  std::uint64_t macs = 0;
  std::uint64_t muls = 0;
  std::uint64_t adds = 0;
  std::map<std::string, OpCount> by_op;

  void add(const std::string& op, const OpCount& c) {
    macs += c.macs;
    muls += c.muls;
    adds += c.adds;
    by_op[op] += c;
  }

  FlopsReport& operator+=(const FlopsReport& o) {
    for (const auto& [name, c] : o.by_op) add(name, c);
    return *this;
  }

  std::uint64_t flops() const noexcept { return 2 * macs + muls + adds; }
  double gflops() const noexcept { return static_cast<double>(flops()) * 1e-9; }

  friend bool operator==(const FlopsReport&, const FlopsReport&) = default;
};

namespace op {

struct Linear {
  std::uint64_t batch, tokens, in_dim, out_dim;
};
struct DwConv1d {
  std::uint64_t batch, tokens, channels, taps;
};
struct LayerNorm {
  std::uint64_t batch, tokens, channels;
};
struct Gelu {
  std::uint64_t elements;
};
struct Hadamard {
  std::uint64_t batch, tokens, channels;
};
struct ResidualAdd {
  std::uint64_t elements;
};
struct Conv2d {
  std::uint64_t out_h, out_w, in_channels, out_channels, kernel;
};
struct Sigmoid {
  std::uint64_t elements;
};

}  // namespace op

using OpDescriptor = std::variant<op::Linear, op::DwConv1d, op::LayerNorm, op::Gelu,
                                  op::Hadamard, op::ResidualAdd, op::Conv2d, op::Sigmoid>;

inline const char* op_name(const OpDescriptor& d) {
  constexpr const char* names[] = {"linear",   "dwconv1d",     "layer_norm", "gelu",
                                   "hadamard", "residual_add", "conv2d",     "sigmoid"};
  return names[d.index()];
}

inline OpCount count_op(const OpDescriptor& d) {
  struct Visitor {
    OpCount operator()(const op::Linear& o) const {
      return {o.batch * o.tokens * o.in_dim * o.out_dim, 0, 0};
    }
    OpCount operator()(const op::DwConv1d& o) const {
      return {o.batch * o.tokens * o.channels * o.taps, 0, 0};
    }
    OpCount operator()(const op::LayerNorm& o) const {
      return {0, 0, o.batch * o.tokens * o.channels};
    }
    OpCount operator()(const op::Gelu& o) const { return {0, 0, o.elements}; }
    OpCount operator()(const op::Hadamard& o) const {
      return {0, o.batch * o.tokens * o.channels, 0};
    }
    OpCount operator()(const op::ResidualAdd& o) const { return {0, 0, o.elements}; }
    OpCount operator()(const op::Conv2d& o) const {
      return {o.out_h * o.out_w * o.in_channels * o.out_channels * o.kernel * o.kernel, 0, 0};
    }
    OpCount operator()(const op::Sigmoid& o) const { return {0, 0, o.elements}; }
  };
  return std::visit(Visitor{}, d);
}

inline FlopsReport count_flops(const OpDescriptor& d) {
  FlopsReport r;
  r.add(op_name(d), count_op(d));
  return r;
}

template <typename Range>
FlopsReport count_flops_all(const Range& descriptors) {
  FlopsReport r;
  for (const OpDescriptor& d : descriptors) r.add(op_name(d), count_op(d));
  return r;
}

}  // namespace falo
