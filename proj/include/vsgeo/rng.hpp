#ifndef VSGEO_RNG_HPP
#define VSGEO_RNG_HPP

#include <cmath>
#include <cstdint>

#include "vsgeo/errors.hpp"

namespace vsgeo {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based splitmix stream: output i is a pure function of (key, i), so
// substreams derived from disjoint ids never overlap and parallel callers can
// draw independently while staying bit-reproducible.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(detail::mix64(seed ^ 0x5851F42D4C957F2Dull)) {}

  RngStream substream(std::uint64_t id) const {
    RngStream s(0);
    s.key_ = detail::mix64(key_ ^ detail::mix64(id ^ 0xD1342543DE82EF95ull));
    s.counter_ = 0;
    return s;
  }

  std::uint64_t next_u64() { return detail::mix64(key_ ^ (0xA0761D6478BD642Full * ++counter_)); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without caching; two uniforms per draw keeps the stream usage
  // independent of call interleaving.
  double normal() {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Marsaglia-Tsang; shapes below one are boosted through G(a) = G(a+1) U^{1/a}.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw ParameterError("rng: gamma shape must be > 0");
    if (shape < 1.0) {
      const double u = std::max(uniform(), 0x1.0p-53);
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = std::max(uniform(), 0x1.0p-53);
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  double beta(double a, double b) {
    const double g1 = gamma(a);
    const double g2 = gamma(b);
    return g1 / (g1 + g2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace vsgeo

#endif
