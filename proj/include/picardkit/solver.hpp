#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "picardkit/lbfgs.hpp"
#include "picardkit/likelihood.hpp"
#include "picardkit/linalg.hpp"
#include "picardkit/score.hpp"

namespace picardkit {

/// How the search direction D = -H^{-1} G is formed.
enum class Policy {
    Identity,             // D = -G (full-batch relative gradient)
    Simple,               // D = -H~_reg^{-1} G (FR-Newton)
    PreconditionedLbfgs,  // L-BFGS seeded with H~_reg (Picard)
};

/// "gradient", "fr-newton", "picard".
std::string_view policy_name(Policy p);

/// Accepts the names above plus "identity", "simple", "preconditioned-lbfgs".
Policy parse_policy(std::string_view name);

struct SolverConfig {
    Policy policy = Policy::PreconditionedLbfgs;
    bool whiteness_constraint = false;
    double tol = 1e-8;  // on sup-norm of G
    std::size_t max_iter = 500;
    double lambda_floor = 1e-2;
    std::size_t memory_size = 7;
    double armijo_c1 = 1e-4;
    double backtrack_factor = 0.5;
    std::size_t max_backtracks = 16;
    double whiteness_tol = 1e-6;  // accepted deviation of (1/T) X X^T from I

    /// Throws ContractError on out-of-range settings.
    void validate() const;
};

/// State after iteration `iteration`. step_size, backtracks and
/// loss_decrease describe the step that produced this iterate (zero for the
/// starting point). loss_decrease is evaluated termwise and stays accurate
/// long after loss itself stops resolving the change.
struct IterationRecord {
    std::size_t iteration = 0;
    double elapsed_seconds = 0.0;
    double loss = 0.0;
    double gradient_sup_norm = 0.0;
    double step_size = 0.0;
    std::size_t backtracks = 0;
    double loss_decrease = 0.0;
};

using Trace = std::vector<IterationRecord>;

struct FitResult {
    Matrix w;
    Matrix y;
    Trace trace;
    bool converged = false;
    std::string stop_reason;  // "converged", "max_iter", "line_search_failed"
    LbfgsMemory memory;       // final curvature pairs (picard only)
};

/// (M - M^T) / 2.
Matrix project_antisym(const Matrix& m);

/// Everything the line search needs about the current iterate.
struct SampleState {
    Matrix w;
    Matrix y;        // W X
    Matrix neglogp;  // -log p(y_it), elementwise
    double loss = 0.0;
};

SampleState evaluate_state(const Matrix& w, const Matrix& x, const ScoreModel& score);

struct LineSearchResult {
    bool success = false;
    double alpha = 0.0;
    double new_loss = 0.0;
    double loss_decrease = 0.0;
    std::size_t backtracks = 0;
    SampleState state;  // accepted iterate, valid when success
};

/// Armijo backtracking over alpha in {1, b, b^2, ...}: accepts the first
/// alpha with L(exp(alpha D) W) <= L(W) + c1 alpha <G, D>. The loss change
/// is computed as -alpha tr(D) + mean_t sum_i [rho(y'_it) - rho(y_it)] so it
/// stays meaningful near convergence. Requires <G, D> < 0.
LineSearchResult line_search(const SampleState& current, const Matrix& x, const ScoreModel& score,
                             const Matrix& d, const Matrix& g, const SolverConfig& config);

LineSearchResult line_search(const Matrix& w, const Matrix& x, const ScoreModel& score, const Matrix& d,
                             const Matrix& g, double loss_at_w, const SolverConfig& config);

/// Called once per iterate with its record and unmixing matrix.
using IterationObserver = std::function<void(const IterationRecord&, const Matrix&)>;

/// Relative quasi-Newton loop starting from W = I. X must be white.
FitResult fit(const Matrix& x, const ScoreModel& score, const SolverConfig& config,
              const IterationObserver& observer = {});

/// Same loop from an explicit starting point (orthogonal when constrained).
FitResult fit(const Matrix& x, const ScoreModel& score, const SolverConfig& config, const Matrix& w0,
              const IterationObserver& observer = {});

/// Amari distance of P = W A from the set of scaled permutations.
double amari_distance(const Matrix& w, const Matrix& a);

}  // namespace picardkit
