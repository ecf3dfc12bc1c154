#include "picardkit/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace picardkit::parallel {
namespace {

std::atomic<long> g_override{-1};

std::size_t from_environment() {
    const char* raw = std::getenv("PICARDKIT_THREADS");
    if (raw == nullptr || *raw == '\0') {
        return std::max(1u, std::thread::hardware_concurrency());
    }
    try {
        const long v = std::stol(raw);
        return v <= 1 ? 1 : static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        return 1;
    }
}

}  // namespace

std::size_t thread_count() {
    const long o = g_override.load();
    if (o >= 0) return o <= 1 ? 1 : static_cast<std::size_t>(o);
    static const std::size_t env = from_environment();
    return env;
}

void set_thread_count(std::size_t n) { g_override.store(static_cast<long>(n)); }

void for_each_chunk(std::size_t n_chunks, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_count(), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t c = w; c < n_chunks; c += workers) fn(c);
        });
    }
    for (std::size_t c = 0; c < n_chunks; c += workers) fn(c);
}

}  // namespace picardkit::parallel
