#include "picardkit/lbfgs.hpp"

#include <vector>

#include "picardkit/errors.hpp"

namespace picardkit {

bool LbfgsMemory::push(const Matrix& s, const Matrix& y) {
    if (s.rows() != y.rows() || s.cols() != y.cols()) {
        throw DimensionError("LbfgsMemory::push: s and y differ in shape");
    }
    if (capacity_ == 0) return false;
    const double ys = frobenius_dot(y, s);
    if (!(ys > kCurvatureSkip * y.norm() * s.norm())) return false;
    if (pairs_.size() == capacity_) pairs_.pop_front();
    pairs_.push_back(MemoryPair{s, y, 1.0 / ys});
    return true;
}

LbfgsMemory update_memory(LbfgsMemory mem, const Matrix& s, const Matrix& y) {
    mem.push(s, y);
    return mem;
}

Matrix two_loop_direction(const LbfgsMemory& mem, const Matrix& g, const ApproxHessianCoeffs& coeffs,
                          double lambda_floor) {
    const auto& pairs = mem.pairs();
    std::vector<double> alpha(pairs.size());

    Matrix q = g;
    for (std::size_t k = pairs.size(); k-- > 0;) {
        alpha[k] = pairs[k].rho * frobenius_dot(pairs[k].s, q);
        q -= alpha[k] * pairs[k].y;
    }

    // r = H~_reg^{-1} q
    Matrix r = -solve_regularized(coeffs, q, lambda_floor);

    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const double beta = pairs[k].rho * frobenius_dot(pairs[k].y, r);
        r += (alpha[k] - beta) * pairs[k].s;
    }
    return -r;
}

}  // namespace picardkit
