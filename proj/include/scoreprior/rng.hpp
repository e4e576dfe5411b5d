#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "scoreprior/errors.hpp"
#include "scoreprior/grid.hpp"

namespace scoreprior {

/// Counter-based random stream in the Philox family (4x64, 10 rounds).
/// The (seed, stream_id) pair is the full key: equal pairs give bit-identical
/// draw sequences, distinct stream_ids give independent streams, and streams
/// never share mutable state, so chains/workers each own one.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() {
    if (out_pos_ == 4) {
      block(block_index_++, out_);
      out_pos_ = 0;
    }
    return out_[out_pos_++];
  }

  /// Uniform double in (0, 1]; never 0, so log() is safe.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via the Box-Muller transform (no rejection, so the
  /// number of uniforms consumed per draw is fixed and reproducible).
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t mulhi(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(a) * b) >> 64);
  }

  void block(std::uint64_t index, std::uint64_t out[4]) const {
    constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

    std::uint64_t c0 = index, c1 = 0, c2 = 0, c3 = 0;
    std::uint64_t k0 = seed_, k1 = stream_id_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t hi0 = mulhi(kMult0, c0), lo0 = kMult0 * c0;
      const std::uint64_t hi1 = mulhi(kMult1, c2), lo1 = kMult1 * c2;
      const std::uint64_t n0 = hi1 ^ c1 ^ k0;
      const std::uint64_t n1 = lo1;
      const std::uint64_t n2 = hi0 ^ c3 ^ k1;
      const std::uint64_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += kWeyl0; k1 += kWeyl1;
    }
    out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_index_ = 0;
  std::uint64_t out_[4] = {};
  int out_pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Grid of IID normal samples. variance == 0 yields the constant `mean` grid
/// without consuming any draws.
inline ImageGrid draw_gaussian(RngStream& rng, int height, int width, double mean,
                               double variance) {
  if (variance < 0.0) throw ConfigError("draw_gaussian: variance must be >= 0");
  ImageGrid g(height, width, mean);
  if (variance == 0.0) return g;
  const double sd = std::sqrt(variance);
  for (double& v : g.data) v = mean + sd * rng.next_gaussian();
  return g;
}

}  // namespace scoreprior
