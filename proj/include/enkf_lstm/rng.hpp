#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace enkf_lstm {

// Subsystems that consume randomness. Each gets its own stream derived from
// the single top-level seed so reordering one consumer never perturbs another.
enum class RngStream : std::uint64_t {
  prior_sampling = 1,
  perturbations = 2,
  synthetic = 3,
  predictive_sampling = 4,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x6A09E667F3BCC909ull));
}

inline std::uint64_t derive_seed(std::uint64_t master, RngStream stream) {
  return derive_seed(master, static_cast<std::uint64_t>(stream));
}

inline std::uint64_t derive_seed(std::uint64_t master, RngStream stream, std::uint64_t sub) {
  return derive_seed(derive_seed(master, stream), sub + 1);
}

// Deterministic random source. Normal draws use an explicit Box-Muller
// transform on top of mt19937_64 so sequences do not depend on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in (0, 1].
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace enkf_lstm
