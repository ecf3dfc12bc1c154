#include "picardkit/score.hpp"

#include "picardkit/errors.hpp"

namespace picardkit {

ScoreModel ScoreModel::from_name(std::string_view name) {
    if (name == "logcosh" || name == "log-cosh" || name == "tanh") return log_cosh();
    if (name == "cubic") return cubic();
    if (name == "gaussian") return gaussian();
    throw ContractError("unknown score model '" + std::string(name) + "' (expected logcosh, cubic or gaussian)");
}

void ScoreModel::neglogp(const Eigen::Ref<const Matrix>& y, Eigen::Ref<Matrix> out) const {
    switch (kind_) {
        case ScoreKind::LogCosh: {
            const Eigen::ArrayXXd a = y.array().abs();
            out.array() = a + (1.0 + (-2.0 * a).exp()).log() - kLog2;
            return;
        }
        case ScoreKind::Cubic: out.array() = 0.25 * y.array().square().square(); return;
        case ScoreKind::Gaussian: out.array() = 0.5 * y.array().square(); return;
    }
}

void ScoreModel::psi(const Eigen::Ref<const Matrix>& y, Eigen::Ref<Matrix> out) const {
    switch (kind_) {
        case ScoreKind::LogCosh: {
            const Eigen::ArrayXXd e = (-2.0 * y.array().abs()).exp();
            out.array() = y.array().sign() * (1.0 - e) / (1.0 + e);
            return;
        }
        case ScoreKind::Cubic: out.array() = y.array().cube(); return;
        case ScoreKind::Gaussian: out = y; return;
    }
}

void ScoreModel::psi_prime(const Eigen::Ref<const Matrix>& y, Eigen::Ref<Matrix> out) const {
    switch (kind_) {
        case ScoreKind::LogCosh: {
            const Eigen::ArrayXXd e = (-2.0 * y.array().abs()).exp();
            out.array() = 1.0 - ((1.0 - e) / (1.0 + e)).square();
            return;
        }
        case ScoreKind::Cubic: out.array() = 3.0 * y.array().square(); return;
        case ScoreKind::Gaussian: out.setOnes(); return;
    }
}

void ScoreModel::psi_and_prime(const Eigen::Ref<const Matrix>& y, Eigen::Ref<Matrix> psi_out,
                               Eigen::Ref<Matrix> prime_out) const {
    switch (kind_) {
        case ScoreKind::LogCosh: {
            const Eigen::ArrayXXd e = (-2.0 * y.array().abs()).exp();
            const Eigen::ArrayXXd t = (1.0 - e) / (1.0 + e);
            psi_out.array() = y.array().sign() * t;
            prime_out.array() = 1.0 - t.square();
            return;
        }
        case ScoreKind::Cubic:
            psi_out.array() = y.array().cube();
            prime_out.array() = 3.0 * y.array().square();
            return;
        case ScoreKind::Gaussian:
            psi_out = y;
            prime_out.setOnes();
            return;
    }
}

std::string ScoreModel::name() const {
    switch (kind_) {
        case ScoreKind::LogCosh: return "logcosh";
        case ScoreKind::Cubic: return "cubic";
        case ScoreKind::Gaussian: return "gaussian";
    }
    return "unknown";
}

}  // namespace picardkit
