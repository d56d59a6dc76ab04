#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace bwproc {

// Worker count: BWPROC_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

// Runs body(i) for i in [0, count) on up to thread_count() threads. Nested
// calls from inside a worker run serially on that worker. Bodies must write
// only to per-index state; callers reduce in index order afterwards.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Deterministic per-stream seed derived from a master seed (splitmix64).
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(substream_seed(master, stream));
}

}  // namespace bwproc
