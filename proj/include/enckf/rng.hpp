#pragma once

#include <cstdint>
#include <random>

#include "enckf/sysmodel.hpp"

namespace enckf {

/// Consumers of randomness inside a campaign. Each gets its own stream so
/// that adding draws to one consumer never shifts another's sequence.
enum class StreamPurpose : std::uint64_t {
  truth_param = 1,
  truth_process = 2,
  truth_measurement = 3,
  filter_init = 4,
  filter_process = 5,
  filter_perturbation = 6,
  filter_resample = 7,
};

/// Stream id for (Monte Carlo run, ensemble size, purpose). Truth streams
/// pass ensemble_size = 0 so every filter sees the same trajectory.
std::uint64_t stream_id(std::uint64_t run, std::uint64_t ensemble_size, StreamPurpose purpose);

/// Deterministic generator keyed by (seed, stream). The engine is
/// std::mt19937_64 (fully specified by the standard); normals come from a
/// local Box-Muller transform because std::normal_distribution is
/// implementation-defined.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Uniform on (0, 1].
  double uniform();
  double standard_normal();
  /// d x cols matrix of independent standard normals, filled column-major.
  Matrix standard_normal_matrix(int d, int cols);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace enckf
