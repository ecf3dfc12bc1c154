#pragma once

#include <cstddef>
#include <deque>

#include "picardkit/likelihood.hpp"
#include "picardkit/linalg.hpp"

namespace picardkit {

/// One curvature pair in relative coordinates: s is the step taken
/// (W_next = exp(s) W_prev), y = G_next - G_prev, rho = 1 / <y, s>.
struct MemoryPair {
    Matrix s;
    Matrix y;
    double rho;
};

/// Ring buffer of the m most recent curvature pairs, oldest first.
class LbfgsMemory {
public:
    explicit LbfgsMemory(std::size_t capacity = 7) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }
    const std::deque<MemoryPair>& pairs() const { return pairs_; }

    /// Stores (s, y) when <y, s> > 1e-10 |y| |s|, evicting the oldest pair
    /// if full. Returns false when the pair was skipped.
    bool push(const Matrix& s, const Matrix& y);

    void clear() { pairs_.clear(); }

private:
    std::size_t capacity_;
    std::deque<MemoryPair> pairs_;
};

inline constexpr double kCurvatureSkip = 1e-10;

/// Value-semantics form of LbfgsMemory::push.
LbfgsMemory update_memory(LbfgsMemory mem, const Matrix& s, const Matrix& y);

/// Two-loop recursion with Frobenius inner products and H~_reg as the
/// initial Hessian. Returns D = -H_P^{-1} G.
Matrix two_loop_direction(const LbfgsMemory& mem, const Matrix& g, const ApproxHessianCoeffs& coeffs,
                          double lambda_floor);

}  // namespace picardkit
