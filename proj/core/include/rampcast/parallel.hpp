#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace rampcast {

/// Process-wide worker bound (the CLI's --jobs). 0 or negative means hardware concurrency.
void set_default_jobs(int jobs);
int default_jobs();

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Each index runs exactly once;
/// callers write results into index-addressed slots so merging is order independent.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int jobs = 0);

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  /// Merges another partial sum (value and its compensation term).
  void merge(const CompensatedSum& other) noexcept;

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// SplitMix64 finalizer; derives independent stream seeds from (seed, a, b).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) noexcept;

}  // namespace rampcast
