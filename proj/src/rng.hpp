#pragma once

#include "common.hpp"

#include <cmath>
#include <random>

namespace acae {

// mt19937_64 is bit-specified by the standard; the value mappings below are
// hand-rolled because std::*_distribution output is implementation-defined
// and corpora must reproduce exactly from a seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in (0, 1); never returns 0 (normalize-safe initialization).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  // Box-Muller.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return mean + stddev * r * std::cos(theta);
  }

  Vec3 normal3(double stddev = 1.0) {
    return Vec3(normal(0.0, stddev), normal(0.0, stddev), normal(0.0, stddev));
  }

  int uniform_int(int n) {  // in [0, n)
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // Uniform over SO(3) via normalized quaternion.
  Mat3 rotation() {
    double q[4];
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& c : q) {
        c = normal();
        norm2 += c * c;
      }
    } while (norm2 < 1e-12);
    double s = 1.0 / std::sqrt(norm2);
    double w = q[0] * s, x = q[1] * s, y = q[2] * s, z = q[3] * s;
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
  }

  template <typename It>
  void shuffle(It first, It last) {
    auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = static_cast<decltype(i)>(next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace acae
