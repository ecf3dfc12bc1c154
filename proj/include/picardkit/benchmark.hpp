#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "picardkit/solver.hpp"

namespace picardkit {

/// "constrained" / "unconstrained".
std::string mode_name(bool constrained);
/// Inverse of mode_name. Throws ContractError on anything else.
bool parse_mode(std::string_view name);

/// "<policy>-<mode>-seed<k>.jsonl"
std::string trace_file_name(Policy policy, bool constrained, std::uint64_t seed);

/// Linear-interpolation percentile (numpy's default), q in [0, 1].
double percentile(std::vector<double> values, double q);

/// First iteration whose gradient sup-norm is <= target.
std::optional<std::size_t> iterations_to_reach(const Trace& trace, double target);

/// Steps k >= 1 that break strict descent: loss_decrease <= 0 or the stored
/// loss went up.
std::size_t count_descent_violations(const Trace& trace);

/// One benchmark run as read back from its trace file.
struct RunCurve {
    std::string algorithm;
    std::string mode;
    bool failed = false;  // died with an error; excluded from percentiles
    Trace trace;
};

struct AggregateRow {
    std::string algorithm;
    std::string mode;
    std::string axis;  // "iteration" or "time"
    double x = 0.0;
    std::size_t n_runs = 0;    // runs contributing to the percentiles
    std::size_t n_failed = 0;  // failed runs in the group
    double p10 = 0.0;
    double median = 0.0;
    double p90 = 0.0;
};

/// Per (algorithm, mode) group: gradient-norm percentiles at every
/// iteration index and on `time_points` evenly spaced instants from 0 to the
/// longest run. A run that stopped early holds its last value.
std::vector<AggregateRow> aggregate_runs(const std::vector<RunCurve>& runs, std::size_t time_points = 200);

/// Header "algorithm,mode,axis,x,n_runs,n_failed,p10,median,p90".
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);
std::vector<AggregateRow> read_aggregate_csv(const std::filesystem::path& path);

}  // namespace picardkit
