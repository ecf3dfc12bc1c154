#include "picardkit/solver.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "picardkit/errors.hpp"
#include "picardkit/parallel.hpp"

namespace picardkit {
namespace {

constexpr double kOrthogonalityTol = 1e-10;

using Clock = std::chrono::steady_clock;

Matrix elementwise_neglogp(const Matrix& y, const ScoreModel& score) {
    Matrix out(y.rows(), y.cols());
    parallel::for_each_column_chunk(y.cols(), [&](Index b, Index len) {
        score.neglogp(y.middleCols(b, len), out.middleCols(b, len));
    });
    return out;
}

}  // namespace

std::string_view policy_name(Policy p) {
    switch (p) {
        case Policy::Identity: return "gradient";
        case Policy::Simple: return "fr-newton";
        case Policy::PreconditionedLbfgs: return "picard";
    }
    return "unknown";
}

Policy parse_policy(std::string_view name) {
    if (name == "gradient" || name == "identity") return Policy::Identity;
    if (name == "fr-newton" || name == "simple") return Policy::Simple;
    if (name == "picard" || name == "preconditioned-lbfgs") return Policy::PreconditionedLbfgs;
    throw ContractError("unknown policy '" + std::string(name) + "' (expected gradient, fr-newton or picard)");
}

void SolverConfig::validate() const {
    auto fail = [](const char* what) { throw ContractError(std::string("SolverConfig: ") + what); };
    if (!(tol > 0.0)) fail("tol must be positive");
    if (max_iter < 1) fail("max_iter must be at least 1");
    if (!(lambda_floor > 0.0)) fail("lambda_floor must be positive");
    if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) fail("armijo_c1 must lie in (0, 1)");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) fail("backtrack_factor must lie in (0, 1)");
    if (!(whiteness_tol > 0.0)) fail("whiteness_tol must be positive");
}

Matrix project_antisym(const Matrix& m) {
    require_square(m, "project_antisym");
    return 0.5 * (m - m.transpose());
}

SampleState evaluate_state(const Matrix& w, const Matrix& x, const ScoreModel& score) {
    SampleState s;
    s.w = w;
    s.y = w * x;
    s.neglogp = elementwise_neglogp(s.y, score);
    s.loss = -log_abs_det(w) + s.neglogp.sum() / static_cast<double>(x.cols());
    return s;
}

LineSearchResult line_search(const SampleState& current, const Matrix& x, const ScoreModel& score,
                             const Matrix& d, const Matrix& g, const SolverConfig& config) {
    const double slope = frobenius_dot(g, d);
    if (!(slope < 0.0)) {
        std::ostringstream msg;
        msg << "line_search: not a descent direction (<G, D> = " << slope << ")";
        throw ContractError(msg.str());
    }
    const double trace_d = d.trace();
    const double inv_t = 1.0 / static_cast<double>(x.cols());

    LineSearchResult out;
    double alpha = 1.0;
    for (std::size_t k = 0; k <= config.max_backtracks; ++k, alpha *= config.backtrack_factor) {
        const Matrix step = alpha * d;
        if (!step.allFinite()) continue;
        SampleState trial;
        trial.w = matrix_exp(step) * current.w;
        if (!trial.w.allFinite()) continue;
        trial.y = trial.w * x;
        trial.neglogp = elementwise_neglogp(trial.y, score);

        const double sample_change =
            parallel::reduce_columns<double>(x.cols(), [&](Index b, Index len) {
                return (trial.neglogp.middleCols(b, len) - current.neglogp.middleCols(b, len)).sum();
            }) *
            inv_t;
        // log|det exp(A)| = tr(A)
        const double change = -alpha * trace_d + sample_change;
        if (!std::isfinite(change)) continue;
        if (change <= config.armijo_c1 * alpha * slope) {
            trial.loss = current.loss + change;
            out.success = true;
            out.alpha = alpha;
            out.new_loss = trial.loss;
            out.loss_decrease = -change;
            out.backtracks = k;
            out.state = std::move(trial);
            return out;
        }
    }
    out.backtracks = config.max_backtracks;
    return out;
}

LineSearchResult line_search(const Matrix& w, const Matrix& x, const ScoreModel& score, const Matrix& d,
                             const Matrix& g, double loss_at_w, const SolverConfig& config) {
    SampleState current = evaluate_state(w, x, score);
    current.loss = loss_at_w;
    return line_search(current, x, score, d, g, config);
}

FitResult fit(const Matrix& x, const ScoreModel& score, const SolverConfig& config,
              const IterationObserver& observer) {
    return fit(x, score, config, Matrix::Identity(x.rows(), x.rows()), observer);
}

FitResult fit(const Matrix& x, const ScoreModel& score, const SolverConfig& config, const Matrix& w0,
              const IterationObserver& observer) {
    config.validate();
    require_finite(x, "signal matrix");
    require_square(w0, "initial unmixing matrix");
    if (w0.rows() != x.rows()) throw DimensionError("fit: initial unmixing matrix does not match X");
    {
        const Matrix c = second_moment(x);
        const double dev = sup_norm(c - Matrix::Identity(c.rows(), c.cols()));
        if (dev > config.whiteness_tol) {
            std::ostringstream msg;
            msg << "fit: input is not white (max |XX^T/T - I| = " << dev << "); whiten it first";
            throw ContractError(msg.str());
        }
    }
    const Index n = x.rows();
    if (config.whiteness_constraint &&
        sup_norm(w0 * w0.transpose() - Matrix::Identity(n, n)) > kOrthogonalityTol) {
        throw ContractError("fit: constrained runs need an orthogonal starting point");
    }

    FitResult result;
    result.memory = LbfgsMemory(config.memory_size);
    LbfgsMemory& memory = result.memory;

    SampleState state = evaluate_state(w0, x, score);
    const auto start = Clock::now();

    Clock::duration excluded{};  // observer time, kept off the clock
    IterationRecord pending;     // step info for the current iterate
    Matrix prev_g;
    Matrix prev_step;

    for (std::size_t it = 0;; ++it) {
        Matrix g;
        ApproxHessianCoeffs coeffs;
        if (config.policy == Policy::Identity) {
            g = relative_gradient(state.y, score);
        } else {
            GradientAndCurvature gc = gradient_and_approx_hessian(state.y, score);
            g = std::move(gc.gradient);
            coeffs = std::move(gc.coeffs);
        }
        if (config.whiteness_constraint) g = project_antisym(g);
        if (!g.allFinite() || !std::isfinite(state.loss)) {
            std::ostringstream msg;
            msg << "fit: non-finite gradient or loss at iteration " << it;
            throw NumericalFailure(msg.str(), it);
        }

        if (it > 0 && config.policy == Policy::PreconditionedLbfgs) {
            memory.push(prev_step, g - prev_g);
        }

        pending.iteration = it;
        pending.loss = state.loss;
        pending.gradient_sup_norm = sup_norm(g);
        result.trace.push_back(pending);
        if (observer) {
            const auto before = Clock::now();
            observer(pending, state.w);
            excluded += Clock::now() - before;
        }

        if (pending.gradient_sup_norm <= config.tol) {
            result.converged = true;
            result.stop_reason = "converged";
            break;
        }
        if (it >= config.max_iter) {
            result.stop_reason = "max_iter";
            break;
        }

        Matrix d;
        switch (config.policy) {
            case Policy::Identity: d = -g; break;
            case Policy::Simple: d = solve_regularized(coeffs, g, config.lambda_floor); break;
            case Policy::PreconditionedLbfgs:
                d = two_loop_direction(memory, g, coeffs, config.lambda_floor);
                break;
        }
        if (config.whiteness_constraint) d = project_antisym(d);

        LineSearchResult ls = line_search(state, x, score, d, g, config);
        if (!ls.success) {
            memory.clear();
            d = -g;
            ls = line_search(state, x, score, d, g, config);
            if (!ls.success) {
                result.stop_reason = "line_search_failed";
                break;
            }
        }

        prev_step = ls.alpha * d;
        prev_g = std::move(g);
        state = std::move(ls.state);
        pending.step_size = ls.alpha;
        pending.backtracks = ls.backtracks;
        pending.loss_decrease = ls.loss_decrease;
        pending.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start - excluded).count();
    }

    result.w = std::move(state.w);
    result.y = std::move(state.y);
    return result;
}

double amari_distance(const Matrix& w, const Matrix& a) {
    require_square(w, "amari_distance");
    if (a.rows() != w.cols() || a.cols() != w.rows()) throw DimensionError("amari_distance: shape mismatch");
    const Matrix p = (w * a).cwiseAbs();
    require_finite(p, "W A");
    const Index n = p.rows();
    const Vector row_max = p.rowwise().maxCoeff();
    const Vector col_max = p.colwise().maxCoeff().transpose();
    if (row_max.minCoeff() == 0.0 || col_max.minCoeff() == 0.0) {
        throw DegenerateDataError("amari_distance: W A has a zero row or column");
    }
    double rows = 0.0;
    double cols = 0.0;
    for (Index i = 0; i < n; ++i) rows += p.row(i).sum() / row_max(i) - 1.0;
    for (Index j = 0; j < n; ++j) cols += p.col(j).sum() / col_max(j) - 1.0;
    return (rows + cols) / (2.0 * static_cast<double>(n));
}

}  // namespace picardkit
