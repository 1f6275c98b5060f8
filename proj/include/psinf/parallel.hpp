#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace psinf {

/// Iterations are grouped into fixed-size chunks; chunk c always covers
/// [c * chunk_size, min(total, (c + 1) * chunk_size)) no matter how many
/// workers run, so per-chunk RNG streams make results worker-count invariant.
inline constexpr std::size_t kChunkSize = 1024;

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Calls fn(chunk_index, begin, end) once per chunk across up to `workers`
/// threads. fn must only write to state owned by its chunk. The first
/// exception thrown by any chunk is rethrown after all threads join.
template <class Fn>
void for_each_chunk(std::size_t total, unsigned workers, Fn&& fn, std::size_t chunk_size = kChunkSize) {
  const std::size_t nchunks = (total + chunk_size - 1) / chunk_size;
  if (nchunks == 0) return;
  const unsigned nthreads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), nchunks));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      const std::size_t begin = c * chunk_size;
      const std::size_t end = std::min(total, begin + chunk_size);
      try {
        fn(c, begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(nchunks);
        return;
      }
    }
  };

  if (nthreads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace psinf
