#include "enckf/rng.hpp"

#include <cmath>
#include <numbers>

namespace enckf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_id(std::uint64_t run, std::uint64_t ensemble_size, StreamPurpose purpose) {
  std::uint64_t h = splitmix64(run);
  h = splitmix64(h ^ ensemble_size);
  return splitmix64(h ^ static_cast<std::uint64_t>(purpose));
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(splitmix64(splitmix64(seed) ^ stream)) {}

double SeededRng::uniform() {
  // 53 random mantissa bits, shifted off zero so log() below is finite.
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double SeededRng::standard_normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

Matrix SeededRng::standard_normal_matrix(int d, int cols) {
  Matrix out(d, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < d; ++i) out(i, j) = standard_normal();
  }
  return out;
}

}  // namespace enckf
