#pragma once

// Counter-based stream derivation and deterministic chunked parallelism.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace isrm {

/// Samples per chunk; chunk k always uses stream k, whatever the thread count.
inline constexpr std::size_t kChunkSize = 2048;

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream `index` under the master seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

/// Engine for stream `index`.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index);

/// Worker count: ISRM_THREADS when set, otherwise the hardware concurrency.
int thread_count();

/// Runs fn(chunk) for chunk = 0..n_chunks-1 on up to thread_count() threads.
/// The first exception thrown by any chunk is rethrown after all workers stop.
void parallel_for_chunks(std::size_t n_chunks, const std::function<void(std::size_t)>& fn);

}  // namespace isrm
