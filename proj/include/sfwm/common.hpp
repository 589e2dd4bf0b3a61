#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace sfwm {

// Error hierarchy. Every contract violation surfaces as one of these.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter outside its legal domain (negative variance, quality 0, ...).
class parameter_error : public error {
 public:
  using error::error;
};

// Mismatched dimensions or lengths.
class shape_error : public error {
 public:
  using error::error;
};

// Non-finite values where finite ones are required.
class numeric_error : public error {
 public:
  using error::error;
};

// Malformed files: checkpoints, manifests, profiles, images.
class format_error : public error {
 public:
  using error::error;
};

// Calibration and metric preconditions.
class calibration_error : public error {
 public:
  using error::error;
};

using rng_t = std::mt19937_64;

// Uniform integer in [0, n). Avoids std::uniform_int_distribution so that
// streams are reproducible across standard library implementations.
inline std::size_t uniform_index(rng_t& rng, std::size_t n) {
  if (n == 0) throw parameter_error("uniform_index: empty range");
  const std::uint64_t m = n;
  const std::uint64_t threshold = (0 - m) % m;  // 2^64 mod n
  std::uint64_t v;
  do {
    v = rng();
  } while (v < threshold);
  return static_cast<std::size_t>(v % m);
}

// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(rng_t& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace sfwm
