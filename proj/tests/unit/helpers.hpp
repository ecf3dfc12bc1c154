#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "picardkit/linalg.hpp"

namespace testing_util {

using picardkit::Index;
using picardkit::Matrix;

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& gen) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = nd(gen);
    }
    return m;
}

inline Matrix laplace(Index rows, Index cols, std::mt19937_64& gen) {
    std::exponential_distribution<double> ed(1.0);
    std::bernoulli_distribution coin(0.5);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = (coin(gen) ? 1.0 : -1.0) * ed(gen) / std::sqrt(2.0);
    }
    return m;
}

inline Matrix random_spd(Index n, std::mt19937_64& gen) {
    const Matrix r = gaussian(n, n, gen);
    return r * r.transpose() + Matrix::Identity(n, n);
}

inline Matrix random_orthogonal(Index n, std::mt19937_64& gen) {
    Eigen::HouseholderQR<Matrix> qr(gaussian(n, n, gen));
    return qr.householderQ();
}

/// Unit-Frobenius-norm random direction.
inline Matrix random_direction(Index n, std::mt19937_64& gen) {
    Matrix e = gaussian(n, n, gen);
    return e / e.norm();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("picardkit-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_util
