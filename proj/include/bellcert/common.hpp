#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bellcert {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Complex = std::complex<double>;

/// Caller passed something structurally invalid (bad dims, bad flags, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A domain-type invariant was violated (non-unit axis, r + |r*| > 1, ...).
class ConstraintError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A calibration value lies above the quantum maximum.
class CalibrationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A grid or band was too coarse to contain any feasible point.
class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Request exceeds the supported problem size.
class ResourceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kHermTol = 1e-12;
inline constexpr double kEigResidualTol = 1e-9;

/// Deterministic uniform random source.
///
/// std::mt19937_64 is fully specified by the standard; the float extraction
/// below avoids std::uniform_real_distribution, whose output is
/// implementation-defined. Results are therefore identical across
/// platforms and compilers for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t raw() { return gen_(); }

  /// Uniform point on the unit sphere.
  Vector3d unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * M_PI);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
  }

  /// Derive an independent stream for substream `index` of `seed`.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 mixing of (seed, index); decouples parallel restarts.
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    x = x ^ (x >> 31);
    return Rng(x);
  }

 private:
  std::mt19937_64 gen_;
};

/// sqrt clamped against tiny negative float noise; throws beyond `guard`.
inline double safe_sqrt(double x, double guard = 1e-12) {
  if (x < -guard) {
    throw std::runtime_error("safe_sqrt: negative argument " + std::to_string(x));
  }
  return std::sqrt(std::max(0.0, x));
}

inline double sbar(double c) { return std::sqrt(std::max(0.0, 1.0 - c * c)); }

}  // namespace bellcert
