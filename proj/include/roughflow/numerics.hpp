#pragma once

// Small shared numerical helpers: deterministic RNG streams, least-squares line
// fits, sample statistics, and an index-parallel loop.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace roughflow {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for the stream identified by (seed, index, purpose tag); independent of
/// evaluation order so parallel fan-out cannot change results.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, std::string_view tag) noexcept;

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index, std::string_view tag) {
  return std::mt19937_64(stream_seed(seed, index, tag));
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two points.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Fit of log(y) against log(x); non-positive y are skipped.
LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double stderr_mean = 0.0;
  std::size_t n = 0;
};

SampleMoments moments(std::span<const double> v);

/// Number of worker threads used by parallel_for (hardware concurrency, at least 1).
unsigned worker_count() noexcept;

/// Runs body(i) for i in [0, n) across worker threads. Each index must write
/// only its own output slot; exceptions are rethrown on the calling thread
/// (the one from the lowest failing index).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace roughflow
