#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace picardkit::parallel {

/// Columns per reduction chunk. Fixed so results never depend on the
/// number of worker threads.
inline constexpr Eigen::Index kChunkColumns = 4096;

/// Worker cap from PICARDKIT_THREADS (0 or 1 = serial). Unset means
/// hardware concurrency.
std::size_t thread_count();

/// Overrides PICARDKIT_THREADS for the current process (tests).
void set_thread_count(std::size_t n);

/// Runs fn(chunk_index) for every chunk, statically split across workers.
void for_each_chunk(std::size_t n_chunks, const std::function<void(std::size_t)>& fn);

/// Runs fn(begin, len) over fixed column chunks of [0, cols).
template <class Fn>
void for_each_column_chunk(Eigen::Index cols, Fn&& fn) {
    const auto n_chunks =
        static_cast<std::size_t>(std::max<Eigen::Index>(1, (cols + kChunkColumns - 1) / kChunkColumns));
    for_each_chunk(n_chunks, [&](std::size_t c) {
        const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunkColumns;
        fn(begin, std::min(kChunkColumns, cols - begin));
    });
}

/// Sums fn(begin, len) over fixed column chunks of [0, cols). Partial
/// results are combined in chunk order so the sum is bit-identical for
/// any thread count.
template <class Result, class Fn>
Result reduce_columns(Eigen::Index cols, Fn&& fn) {
    const auto n_chunks =
        static_cast<std::size_t>(std::max<Eigen::Index>(1, (cols + kChunkColumns - 1) / kChunkColumns));
    std::vector<Result> partial(n_chunks);
    for_each_chunk(n_chunks, [&](std::size_t c) {
        const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunkColumns;
        const Eigen::Index len = std::min(kChunkColumns, cols - begin);
        partial[c] = fn(begin, len);
    });
    Result total = partial[0];
    for (std::size_t c = 1; c < n_chunks; ++c) total += partial[c];
    return total;
}

}  // namespace picardkit::parallel
