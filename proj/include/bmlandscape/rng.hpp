#ifndef BMLANDSCAPE_RNG_HPP
#define BMLANDSCAPE_RNG_HPP

// Platform-stable random numbers. std::mt19937_64 has a fully specified output
// sequence; the standard distributions do not, so uniforms and normals are
// derived here from raw 64-bit words.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "bmlandscape/matkernel.hpp"

namespace bml {

inline constexpr const char* kRngName = "mt19937_64+splitmix64-seeding+box-muller";

/// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `stream_id` derived from a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; both variates of a pair are used.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    // Column-major fill order.
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bml

#endif  // BMLANDSCAPE_RNG_HPP
