#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ldmatrix {

// Counter-based deterministic random stream.
//
// Every stochastic operation derives its stream from (master seed, operation
// label, path index).  Streams for distinct (label, path) pairs are
// statistically independent, and a path's stream never depends on how paths
// are scheduled across threads, so every estimate in the library is a pure
// function of (config, seed).  All generation is integer/bit-exact arithmetic
// plus libm calls on exactly reproducible doubles, so results are identical
// across runs and thread counts.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t op_id,
            std::uint64_t path_index = 0) {
    state_ = finalize(master_seed + 0x9E3779B97F4A7C15ULL);
    state_ = finalize(state_ ^ (op_id + 0xD1B54A32D192ED03ULL));
    state_ = finalize(state_ ^ (path_index + 0x8CB92BA72F3D8DD7ULL));
  }

  // FNV-1a hash of an operation label; stable across platforms.
  static constexpr std::uint64_t op_label(std::string_view name) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : name) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 0x100000001B3ULL;
    }
    return h;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return finalize(state_);
  }

  // Uniform on the open interval (0, 1): never returns 0 or 1 exactly.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.  No caching of the second variate: each
  // call consumes exactly two uniforms, keeping the stream position a pure
  // function of the call count.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // Exponential with unit rate.
  double exponential() { return -std::log(uniform01()); }

  // Index i with probability weights[i] / wsum; weights must be nonnegative.
  // Consumes exactly one uniform.
  std::size_t categorical(const double* weights, std::size_t n, double wsum) {
    double u = uniform01() * wsum;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

 private:
  static constexpr std::uint64_t finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace ldmatrix
