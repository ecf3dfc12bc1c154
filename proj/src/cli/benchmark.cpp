#include "picardkit/benchmark.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "picardkit/errors.hpp"

namespace picardkit {
namespace {

const std::string kAggregateHeader = "algorithm,mode,axis,x,n_runs,n_failed,p10,median,p90";

std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

// Gradient norm of `trace` at time t: the last record with t_sec <= t.
double norm_at_time(const Trace& trace, double t) {
    auto it = std::upper_bound(trace.begin(), trace.end(), t,
                               [](double v, const IterationRecord& r) { return v < r.elapsed_seconds; });
    if (it == trace.begin()) return trace.front().gradient_sup_norm;
    return std::prev(it)->gradient_sup_norm;
}

}  // namespace

std::string mode_name(bool constrained) { return constrained ? "constrained" : "unconstrained"; }

bool parse_mode(std::string_view name) {
    if (name == "constrained") return true;
    if (name == "unconstrained") return false;
    throw ContractError("unknown mode '" + std::string(name) + "' (expected constrained or unconstrained)");
}

std::string trace_file_name(Policy policy, bool constrained, std::uint64_t seed) {
    return std::string(policy_name(policy)) + "-" + mode_name(constrained) + "-seed" + std::to_string(seed) +
           ".jsonl";
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw ContractError("percentile of an empty set");
    if (!(q >= 0.0 && q <= 1.0)) throw ContractError("percentile rank must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::optional<std::size_t> iterations_to_reach(const Trace& trace, double target) {
    for (const IterationRecord& r : trace) {
        if (r.gradient_sup_norm <= target) return r.iteration;
    }
    return std::nullopt;
}

std::size_t count_descent_violations(const Trace& trace) {
    std::size_t bad = 0;
    for (std::size_t k = 1; k < trace.size(); ++k) {
        if (!(trace[k].loss_decrease > 0.0) || !(trace[k].loss <= trace[k - 1].loss)) ++bad;
    }
    return bad;
}

std::vector<AggregateRow> aggregate_runs(const std::vector<RunCurve>& runs, std::size_t time_points) {
    if (time_points < 2) throw ContractError("aggregate_runs: need at least 2 time points");
    std::map<std::pair<std::string, std::string>, std::vector<const RunCurve*>> groups;
    for (const RunCurve& r : runs) groups[{r.algorithm, r.mode}].push_back(&r);

    std::vector<AggregateRow> rows;
    for (const auto& [key, members] : groups) {
        std::vector<const Trace*> live;
        std::size_t failed = 0;
        for (const RunCurve* r : members) {
            if (r->failed || r->trace.empty()) {
                ++failed;
            } else {
                live.push_back(&r->trace);
            }
        }
        if (live.empty()) continue;

        auto emit = [&](const char* axis, double x, const std::vector<double>& v) {
            rows.push_back({key.first, key.second, axis, x, v.size(), failed, percentile(v, 0.1),
                            percentile(v, 0.5), percentile(v, 0.9)});
        };

        std::size_t longest = 0;
        double t_max = 0.0;
        for (const Trace* t : live) {
            longest = std::max(longest, t->size());
            t_max = std::max(t_max, t->back().elapsed_seconds);
        }
        std::vector<double> v(live.size());
        for (std::size_t k = 0; k < longest; ++k) {
            for (std::size_t r = 0; r < live.size(); ++r) {
                const Trace& t = *live[r];
                v[r] = t[std::min(k, t.size() - 1)].gradient_sup_norm;
            }
            emit("iteration", static_cast<double>(k), v);
        }
        for (std::size_t p = 0; p < time_points; ++p) {
            const double x = t_max * static_cast<double>(p) / static_cast<double>(time_points - 1);
            for (std::size_t r = 0; r < live.size(); ++r) v[r] = norm_at_time(*live[r], x);
            emit("time", x, v);
        }
    }
    return rows;
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << kAggregateHeader << '\n';
    for (const AggregateRow& r : rows) {
        out << r.algorithm << ',' << r.mode << ',' << r.axis << ',' << fmt(r.x) << ',' << r.n_runs << ','
            << r.n_failed << ',' << fmt(r.p10) << ',' << fmt(r.median) << ',' << fmt(r.p90) << '\n';
    }
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::vector<AggregateRow> read_aggregate_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != kAggregateHeader) {
        throw FormatError(path.string() + ": unexpected aggregate header");
    }
    std::vector<AggregateRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 9) {
            throw FormatError(path.string() + ": line " + std::to_string(line_no) + " has " +
                              std::to_string(f.size()) + " fields, expected 9");
        }
        try {
            rows.push_back({f[0], f[1], f[2], std::stod(f[3]), std::stoul(f[4]), std::stoul(f[5]), std::stod(f[6]),
                            std::stod(f[7]), std::stod(f[8])});
        } catch (const std::exception&) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": non-numeric field");
        }
    }
    return rows;
}

}  // namespace picardkit
