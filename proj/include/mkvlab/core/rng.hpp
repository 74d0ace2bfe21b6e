#pragma once

#include <cmath>
#include <cstdint>

#include "mkvlab/core/philox.hpp"

namespace mkvlab {

// Independent stream families sharing one user seed.
enum class StreamDomain : std::uint32_t {
  kInitialSample = 1,
  kNoise = 2,
  kResample = 3,
};

// Sequential view onto one Philox stream identified by (seed, domain, id).
// Block b of the stream is Philox(counter = {b_lo, b_hi, id, domain}, key = seed)
// and yields two 53-bit uniforms, or two standard normals via Box-Muller.
// Uniform and normal draws never share a block.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, StreamDomain domain, std::uint32_t id, std::uint64_t first_block = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        id_(id),
        domain_(static_cast<std::uint32_t>(domain)),
        block_(first_block) {}

  // Uniform in the open interval (0, 1).
  double uniform() {
    if (uniform_buffered_) {
      uniform_buffered_ = false;
      return uniform_spare_;
    }
    double a;
    next_block(a, uniform_spare_);
    uniform_buffered_ = true;
    return a;
  }

  double normal() {
    if (normal_buffered_) {
      normal_buffered_ = false;
      return normal_spare_;
    }
    double u1;
    double u2;
    next_block(u1, u2);
    constexpr double two_pi = 6.283185307179586476925;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    normal_spare_ = radius * std::sin(two_pi * u2);
    normal_buffered_ = true;
    return radius * std::cos(two_pi * u2);
  }

  std::uint64_t next_block_index() const { return block_; }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  void next_block(double& a, double& b) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  id_, domain_};
    const auto out = Philox4x32::generate(ctr, key_);
    ++block_;
    a = to_unit(out[0], out[1]);
    b = to_unit(out[2], out[3]);
  }

  Philox4x32::Key key_;
  std::uint32_t id_;
  std::uint32_t domain_;
  std::uint64_t block_;
  double uniform_spare_ = 0.0;
  bool uniform_buffered_ = false;
  double normal_spare_ = 0.0;
  bool normal_buffered_ = false;
};

}  // namespace mkvlab
