#pragma once

#include <cmath>
#include <cstdint>

namespace ssqp {

// Counter-based random numbers: every value is a pure function of
// (seed, stream, index), so a draw can be reproduced without replaying
// the generator. Mixing is the splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) { return mix64(mix64(a) ^ (b * 0xd1b54a32d192ed03ULL)); }

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) { return mix64(mix64(a, b) ^ (c * 0x8cb92ba72f3d8dd7ULL)); }

// Uniform in the open interval (0,1).
inline double u01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54; }

// Pair of independent standard normals via Box-Muller.
inline void normal_pair(std::uint64_t b1, std::uint64_t b2, double& z0, double& z1) {
  const double u1 = u01(b1);
  const double u2 = u01(b2);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  z0 = r * std::cos(a);
  z1 = r * std::sin(a);
}

// Deterministic normal stream for one (seed, stream, draw) key.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t draw)
      : key_(mix64(seed, stream, draw)) {}

  double next() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double z0, z1;
    normal_pair(mix64(key_, 2 * idx_), mix64(key_, 2 * idx_ + 1), z0, z1);
    ++idx_;
    spare_ = z1;
    have_ = true;
    return z0;
  }

 private:
  std::uint64_t key_;
  std::uint64_t idx_ = 0;
  double spare_ = 0.0;
  bool have_ = false;
};

}  // namespace ssqp
