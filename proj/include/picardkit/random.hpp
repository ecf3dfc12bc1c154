#pragma once

#include <cstdint>
#include <random>

namespace picardkit {

/// splitmix64 finalizer; derives independent stream seeds from one seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Deterministic generator: std::mt19937_64 (its output sequence is fixed by
/// the C++ standard) with hand-written transforms, since the standard
/// distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1).
    double uniform_open();
    /// Standard normal (polar Box-Muller).
    double normal();
    /// Laplace with zero mean and unit variance.
    double laplace();
    /// Uniform integer in [0, bound), rejection-sampled (bound >= 1).
    std::uint64_t below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace picardkit
