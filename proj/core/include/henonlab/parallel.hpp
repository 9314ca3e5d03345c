#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

namespace henonlab {

/// Worker count: HENONLAB_THREADS when set and positive, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, n). Indices are split into contiguous chunks, one
/// per worker; body must only write state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Wall-clock budget shared by long computations. Default-constructed
/// deadlines never expire.
class Deadline {
 public:
  Deadline() = default;
  static Deadline after(std::chrono::milliseconds budget);

  bool expired() const;
  bool bounded() const { return limit_.has_value(); }

 private:
  std::optional<std::chrono::steady_clock::time_point> limit_;
};

/// splitmix64 finalizer; used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace henonlab
