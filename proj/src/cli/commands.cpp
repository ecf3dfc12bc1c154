#include "picardkit/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "picardkit/benchmark.hpp"
#include "picardkit/data.hpp"
#include "picardkit/diagnostics.hpp"
#include "picardkit/errors.hpp"
#include "picardkit/trace_io.hpp"

namespace picardkit {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "picardkit 1.0.0";

/// Flag combination that CLI11 cannot express (e.g. per-kind requirements).
class UsageError : public Error {
public:
    using Error::Error;
};

struct DatasetOptions {
    std::string kind;
    Index n = 8;
    Index t = 20000;
    std::string distribution = "laplace";
    double mixture_offset = 0.9;
    double overcomplete_factor = 2.0;
    double noise_level = 0.1;
    std::string image;
    Index edge = 8;
    Index count = 20000;
    std::string input;
};

struct PreprocessOptions {
    Index pca = 0;
    bool assume_white = false;
};

struct SolverOptions {
    std::string policy = "picard";
    bool constrained = false;
    std::string score = "logcosh";
    double tol = 1e-8;
    std::size_t max_iter = 500;
    double lambda_floor = 1e-2;
    std::size_t memory = 7;
};

void add_dataset_options(CLI::App* app, DatasetOptions& d, bool allow_file) {
    std::vector<std::string> kinds = {"synthetic", "dependent", "patches"};
    if (allow_file) kinds.push_back("file");
    app->add_option("--kind", d.kind, "Dataset generator")->required()->check(CLI::IsMember(kinds));
    app->add_option("--n", d.n, "Number of signals (synthetic, dependent)")->check(CLI::Range(2, 1 << 20));
    app->add_option("--t", d.t, "Number of samples (synthetic, dependent)")->check(CLI::PositiveNumber);
    app->add_option("--distribution", d.distribution, "Source density (synthetic)")
        ->check(CLI::IsMember({"laplace", "uniform", "gauss-mixture"}));
    app->add_option("--mixture-offset", d.mixture_offset, "Component offset for gauss-mixture sources");
    app->add_option("--overcomplete-factor", d.overcomplete_factor, "Latents per base (dependent)");
    app->add_option("--noise", d.noise_level, "Additive noise level (dependent)");
    app->add_option("--image", d.image, "PGM image (patches)");
    app->add_option("--edge", d.edge, "Patch edge length (patches)")->check(CLI::PositiveNumber);
    app->add_option("--count", d.count, "Number of patches (patches)")->check(CLI::PositiveNumber);
    if (allow_file) app->add_option("--input", d.input, "Signal matrix file (file)");
}

void add_preprocess_options(CLI::App* app, PreprocessOptions& p, bool allow_assume_white) {
    app->add_option("--pca", p.pca, "Reduce to the top-k principal components before whitening (0 = off)")
        ->check(CLI::NonNegativeNumber);
    if (allow_assume_white) app->add_flag("--assume-white", p.assume_white, "Skip whitening");
}

void add_solver_options(CLI::App* app, SolverOptions& s, bool with_policy) {
    if (with_policy) {
        app->add_option("--policy", s.policy, "Hessian approximation")
            ->check(CLI::IsMember({"gradient", "fr-newton", "picard", "identity", "simple", "preconditioned-lbfgs"}));
        app->add_flag("--constrained", s.constrained, "Whiteness-constrained (orthogonal) mode");
    }
    app->add_option("--score", s.score, "Density model")->check(CLI::IsMember({"logcosh", "cubic", "gaussian"}));
    app->add_option("--tol", s.tol, "Stop when the gradient sup-norm is below this")->check(CLI::PositiveNumber);
    app->add_option("--max-iter", s.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
    app->add_option("--lambda-floor", s.lambda_floor, "Eigenvalue floor of the regularized approximation")
        ->check(CLI::PositiveNumber);
    app->add_option("--memory", s.memory, "L-BFGS memory size");
}

SolverConfig make_config(const SolverOptions& s, Policy policy, bool constrained) {
    SolverConfig c;
    c.policy = policy;
    c.whiteness_constraint = constrained;
    c.tol = s.tol;
    c.max_iter = s.max_iter;
    c.lambda_floor = s.lambda_floor;
    c.memory_size = s.memory;
    c.validate();
    return c;
}

json config_json(const SolverConfig& c, const ScoreModel& score) {
    return json{{"policy", policy_name(c.policy)},
                {"mode", mode_name(c.whiteness_constraint)},
                {"score", score.name()},
                {"tol", c.tol},
                {"max_iter", c.max_iter},
                {"lambda_floor", c.lambda_floor},
                {"memory_size", c.memory_size},
                {"armijo_c1", c.armijo_c1},
                {"backtrack_factor", c.backtrack_factor},
                {"max_backtracks", c.max_backtracks}};
}

json provenance_json(const Provenance& p) {
    json params = json::object();
    for (const auto& [k, v] : p.params) params[k] = v;
    return json{{"generator", p.generator}, {"params", params}};
}

Dataset build_dataset(const DatasetOptions& d, std::uint64_t seed) {
    if (d.kind == "synthetic") {
        SourceSpec spec;
        spec.distribution = parse_distribution(d.distribution);
        spec.mixture_offset = d.mixture_offset;
        return generate_synthetic(d.n, d.t, seed, spec);
    }
    if (d.kind == "dependent") return generate_dependent(d.n, d.t, seed, d.overcomplete_factor, d.noise_level);
    if (d.kind == "patches") {
        if (d.image.empty()) throw UsageError("--kind patches requires --image");
        return extract_patches(read_pgm(d.image), d.edge, d.count, seed);
    }
    if (d.input.empty()) throw UsageError("--kind file requires --input");
    Dataset out;
    out.x = load_matrix(d.input);
    out.provenance.generator = "file";
    out.provenance.params = {{"path", fs::absolute(d.input).string()}};
    return out;
}

struct Prepared {
    Matrix z;
    std::optional<WhiteningResult> whitening;
    json description;
};

Prepared preprocess(const Matrix& x, const PreprocessOptions& p) {
    Prepared out;
    Matrix reduced;
    const Matrix* src = &x;
    if (p.pca > 0) {
        reduced = pca_reduce(x, p.pca);
        src = &reduced;
    }
    out.description = {{"pca", p.pca > 0 ? json(p.pca) : json(nullptr)},
                       {"whitening", p.assume_white ? "assumed" : "zca"}};
    if (p.assume_white) {
        out.z = *src;
    } else {
        Whitened w = whiten(*src);
        out.z = std::move(w.z);
        out.whitening = std::move(w.result);
    }
    return out;
}

std::string joined_command(const std::vector<std::string>& args) {
    std::string s = "picardkit";
    for (const std::string& a : args) s += " " + a;
    return s;
}

fs::path matrix_path(const fs::path& dir, const std::string& stem, const std::string& format) {
    return dir / (stem + (format == "csv" ? ".csv" : ".bin"));
}

void save_with_sidecar(const fs::path& path, const Matrix& m, const json& provenance) {
    save_matrix(path, m);
    json meta = provenance;
    meta["schema_version"] = kTraceSchemaVersion;
    meta["file"] = path.filename().string();
    meta["rows"] = m.rows();
    meta["cols"] = m.cols();
    write_json(fs::path(path.string() + ".json"), meta);
}

void write_values(const fs::path& path, const Vector& v, const json& provenance) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    char buf[32];
    for (Index k = 0; k < v.size(); ++k) {
        const auto res = std::to_chars(buf, buf + sizeof buf, v(k), std::chars_format::general, 17);
        out.write(buf, res.ptr - buf);
        out.put('\n');
    }
    if (!out) throw Error("failed writing '" + path.string() + "'");
    json meta = provenance;
    meta["schema_version"] = kTraceSchemaVersion;
    meta["file"] = path.filename().string();
    write_json(fs::path(path.string() + ".json"), meta);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory '" + dir.string() + "': " + ec.message());
}

json number_or_null(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    auto to_u64 = [&](const std::string& s) {
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
            throw UsageError("invalid seed list '" + text + "'");
        }
        return v;
    };
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            seeds.push_back(to_u64(item));
        } else {
            const std::uint64_t lo = to_u64(item.substr(0, dash));
            const std::uint64_t hi = to_u64(item.substr(dash + 1));
            if (hi < lo || hi - lo > 100000) throw UsageError("invalid seed range '" + item + "'");
            for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        }
    }
    if (seeds.empty()) throw UsageError("empty seed list");
    return seeds;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// One fit streamed to a trace file. Never throws for solver failures; the
/// error lands in the returned summary and in the trace footer.
struct TracedFit {
    std::optional<FitResult> result;
    json summary;
    int exit_code = kExitSuccess;
};

TracedFit traced_fit(const Matrix& z, const ScoreModel& score, const SolverConfig& cfg, const Matrix& w0,
                     const fs::path& trace_path, json header) {
    TraceWriter writer(trace_path, std::move(header));
    const Index n = z.rows();
    double max_orth = 0.0;
    std::size_t records = 0;
    auto observer = [&](const IterationRecord& r, const Matrix& w) {
        writer.write(r);
        ++records;
        if (cfg.whiteness_constraint) {
            max_orth = std::max(max_orth, sup_norm(w * w.transpose() - Matrix::Identity(n, n)));
        }
    };

    TracedFit out;
    json& s = out.summary;
    s["schema_version"] = kTraceSchemaVersion;
    try {
        FitResult r = fit(z, score, cfg, w0, observer);
        const IterationRecord& last = r.trace.back();
        s["status"] = r.stop_reason;
        s["converged"] = r.converged;
        s["iterations"] = last.iteration;
        s["final_gnorm"] = last.gradient_sup_norm;
        s["final_loss"] = last.loss;
        s["elapsed_sec"] = last.elapsed_seconds;
        s["rate"] = number_or_null(measure_rate(r.trace, last.loss));
        s["descent_violations"] = count_descent_violations(r.trace);
        if (cfg.whiteness_constraint) {
            s["max_orthogonality_error"] = max_orth;
            s["final_orthogonality_error"] = sup_norm(r.w * r.w.transpose() - Matrix::Identity(n, n));
        }
        if (r.stop_reason == "line_search_failed") out.exit_code = kExitNumericalFailure;
        out.result = std::move(r);
    } catch (const NumericalFailure& e) {
        s["status"] = "failed";
        s["converged"] = false;
        s["error"] = e.what();
        s["failed_iteration"] = e.iteration();
        s["iterations"] = records == 0 ? json(nullptr) : json(records - 1);
        out.exit_code = kExitNumericalFailure;
    } catch (const SingularityError& e) {
        s["status"] = "failed";
        s["converged"] = false;
        s["error"] = e.what();
        s["iterations"] = records == 0 ? json(nullptr) : json(records - 1);
        out.exit_code = kExitNumericalFailure;
    }
    writer.finish(s);
    return out;
}

// ---------------------------------------------------------------------------

int cmd_generate(const DatasetOptions& d, std::uint64_t seed, const std::string& out_dir, const std::string& format,
                 const std::string& command, std::ostream& out) {
    if (d.kind == "patches" && d.image.empty()) throw UsageError("--kind patches requires --image");
    const Dataset ds = build_dataset(d, seed);
    ensure_dir(out_dir);
    const json prov = {{"command", command}, {"tool", kToolVersion}, {"seed", seed},
                       {"dataset", provenance_json(ds.provenance)}};
    json report = prov;
    report["files"] = json::object();
    auto put = [&](const std::string& stem, const Matrix& m) {
        const fs::path p = matrix_path(out_dir, stem, format);
        save_with_sidecar(p, m, prov);
        report["files"][stem] = {{"path", p.string()}, {"rows", m.rows()}, {"cols", m.cols()}};
    };
    put("X", ds.x);
    if (ds.ground_truth) {
        put("A", ds.ground_truth->a);
        put("S", ds.ground_truth->s);
    }
    out << report.dump(2) << '\n';
    return kExitSuccess;
}

int cmd_whiten(const std::string& input, const std::string& output, const std::string& whitener_path,
               const PreprocessOptions& p, const std::string& command, std::ostream& out) {
    const Matrix x = load_matrix(input);
    PreprocessOptions po = p;
    po.assume_white = false;
    const Prepared prep = preprocess(x, po);
    const json prov = {{"command", command},
                       {"tool", kToolVersion},
                       {"dataset", {{"generator", "file"}, {"params", {{"path", fs::absolute(input).string()}}}}},
                       {"preprocessing", prep.description}};
    if (fs::path(output).has_parent_path()) ensure_dir(fs::path(output).parent_path());
    save_with_sidecar(output, prep.z, prov);
    if (!whitener_path.empty()) save_with_sidecar(whitener_path, prep.whitening->whitener, prov);
    json report = prov;
    report["rows"] = prep.z.rows();
    report["cols"] = prep.z.cols();
    const Vector& ev = prep.whitening->covariance_eigenvalues;
    report["covariance_condition"] = ev(0) / ev(ev.size() - 1);
    out << report.dump(2) << '\n';
    return kExitSuccess;
}

int cmd_fit(const std::string& input, const std::string& out_dir, const std::string& format,
            const std::string& mixing, const PreprocessOptions& p, const SolverOptions& so,
            const std::string& command, std::ostream& out, std::ostream& err) {
    const Matrix x = load_matrix(input);
    const Prepared prep = preprocess(x, p);
    const ScoreModel score = ScoreModel::from_name(so.score);
    const SolverConfig cfg = make_config(so, parse_policy(so.policy), so.constrained);
    ensure_dir(out_dir);

    const json dataset = {{"generator", "file"}, {"params", {{"path", fs::absolute(input).string()}}}};
    json header = {{"command", command},
                   {"tool", kToolVersion},
                   {"config", config_json(cfg, score)},
                   {"dataset", dataset},
                   {"preprocessing", prep.description}};
    const Index n = prep.z.rows();
    TracedFit tf = traced_fit(prep.z, score, cfg, Matrix::Identity(n, n), fs::path(out_dir) / "trace.jsonl", header);
    json summary = tf.summary;

    if (tf.result) {
        const FitResult& r = *tf.result;
        json prov = header;
        save_with_sidecar(matrix_path(out_dir, "W", format), r.w, prov);
        save_with_sidecar(matrix_path(out_dir, "Y", format), r.y, prov);
        if (prep.whitening) {
            save_with_sidecar(matrix_path(out_dir, "whitener", format), prep.whitening->whitener, prov);
            save_with_sidecar(matrix_path(out_dir, "unmixing", format), Matrix(r.w * prep.whitening->whitener), prov);
        }
        if (!mixing.empty()) {
            if (!prep.whitening || p.pca > 0) {
                throw UsageError("--mixing needs whitening without --pca (the unmixing must act on raw X)");
            }
            const Matrix a = load_matrix(mixing);
            summary["amari_distance"] = amari_distance(r.w * prep.whitening->whitener, a);
        }
    }
    summary["command"] = command;
    summary["config"] = header["config"];
    write_json(fs::path(out_dir) / "summary.json", summary);
    out << summary.dump(2) << '\n';
    if (tf.exit_code != kExitSuccess) err << "fit failed: " << summary.value("error", summary.value("status", "")) << '\n';
    return tf.exit_code;
}

int cmd_benchmark(const DatasetOptions& d, const PreprocessOptions& p, const SolverOptions& so,
                  const std::string& algorithms, const std::string& modes, const std::string& seed_text,
                  const std::string& out_dir, double target, std::size_t time_points, const std::string& command,
                  std::ostream& out, std::ostream& err) {
    std::vector<Policy> policies;
    for (const std::string& a : split_list(algorithms)) policies.push_back(parse_policy(a));
    std::vector<bool> mode_list;
    for (const std::string& m : split_list(modes)) mode_list.push_back(parse_mode(m));
    if (policies.empty() || mode_list.empty()) throw UsageError("need at least one algorithm and one mode");
    const std::vector<std::uint64_t> seeds = parse_seeds(seed_text);
    const ScoreModel score = ScoreModel::from_name(so.score);
    for (Policy pol : policies) {
        for (bool c : mode_list) make_config(so, pol, c);
    }

    const fs::path root(out_dir);
    const fs::path traces = root / "traces";
    ensure_dir(traces);

    std::optional<Dataset> shared;  // --kind file loads once; seeds only move the start
    if (d.kind == "file") shared = build_dataset(d, 0);

    json runs = json::array();
    std::vector<std::pair<json, fs::path>> written;
    for (std::uint64_t seed : seeds) {
        std::optional<Prepared> prep;
        json dataset;
        std::string data_error;
        try {
            const Dataset ds = shared ? *shared : build_dataset(d, seed);
            dataset = provenance_json(ds.provenance);
            prep = preprocess(ds.x, p);
        } catch (const UsageError&) {
            throw;
        } catch (const Error& e) {
            data_error = e.what();
        }
        for (Policy pol : policies) {
            for (bool constrained : mode_list) {
                const SolverConfig cfg = make_config(so, pol, constrained);
                const fs::path tp = traces / trace_file_name(pol, constrained, seed);
                json run = {{"algorithm", policy_name(pol)},
                            {"mode", mode_name(constrained)},
                            {"seed", seed},
                            {"trace", fs::relative(tp, root).string()}};
                if (!prep) {
                    json header = {{"command", command}, {"tool", kToolVersion}, {"seed", seed},
                                   {"config", config_json(cfg, score)}};
                    TraceWriter w(tp, header);
                    json s = {{"status", "failed"}, {"converged", false}, {"error", data_error}};
                    w.finish(s);
                    run.update(s);
                } else {
                    const Index n = prep->z.rows();
                    const Matrix w0 = shared ? random_orthogonal(n, seed) : Matrix::Identity(n, n);
                    json header = {{"command", command},
                                   {"tool", kToolVersion},
                                   {"seed", seed},
                                   {"config", config_json(cfg, score)},
                                   {"dataset", dataset},
                                   {"preprocessing", prep->description},
                                   {"start", shared ? "random-orthogonal" : "identity"}};
                    TracedFit tf = traced_fit(prep->z, score, cfg, w0, tp, header);
                    run.update(tf.summary);
                }
                run.erase("schema_version");
                runs.push_back(run);
                written.emplace_back(run, tp);
                err << "[" << policy_name(pol) << " " << mode_name(constrained) << " seed " << seed << "] "
                    << run.value("status", "") << '\n';
            }
        }
    }

    // Aggregation only looks at the trace files written above.
    std::vector<RunCurve> curves;
    for (auto& [run, path] : written) {
        const TraceFile tf = read_trace(path);
        RunCurve c;
        c.algorithm = run["algorithm"];
        c.mode = run["mode"];
        c.failed = !tf.summary || tf.summary->value("status", "") == "failed";
        c.trace = tf.records;
        const auto hit = iterations_to_reach(c.trace, target);
        run["iters_to_target"] = hit ? json(*hit) : json(nullptr);
        const auto it = std::find_if(runs.begin(), runs.end(), [&](const json& r) {
            return r["algorithm"] == run["algorithm"] && r["mode"] == run["mode"] && r["seed"] == run["seed"];
        });
        (*it)["iters_to_target"] = run["iters_to_target"];
        curves.push_back(std::move(c));
    }
    const std::vector<AggregateRow> rows = aggregate_runs(curves, time_points);
    const fs::path agg = root / "aggregate.csv";
    write_aggregate_csv(agg, rows);

    json groups = json::array();
    for (Policy pol : policies) {
        for (bool constrained : mode_list) {
            std::vector<double> hits;
            std::vector<double> rates;
            std::size_t failed = 0;
            std::size_t violations = 0;
            for (const json& r : runs) {
                if (r["algorithm"] != policy_name(pol) || r["mode"] != mode_name(constrained)) continue;
                if (r.value("status", "") == "failed") {
                    ++failed;
                    continue;
                }
                // Runs that never reached the target count as +inf.
                hits.push_back(r["iters_to_target"].is_null() ? std::numeric_limits<double>::infinity()
                                                              : r["iters_to_target"].get<double>());
                if (!r["rate"].is_null()) rates.push_back(r["rate"].get<double>());
                violations += r.value("descent_violations", std::size_t{0});
            }
            json g = {{"algorithm", policy_name(pol)},
                      {"mode", mode_name(constrained)},
                      {"n_runs", hits.size()},
                      {"n_failed", failed},
                      {"descent_violations", violations}};
            g["median_iters_to_target"] = hits.empty() ? json(nullptr) : finite_or_null(percentile(hits, 0.5));
            g["median_rate"] = rates.empty() ? json(nullptr) : json(percentile(rates, 0.5));
            groups.push_back(g);
        }
    }

    const json summary = {{"schema_version", kTraceSchemaVersion},
                          {"command", command},
                          {"tool", kToolVersion},
                          {"target_gnorm", target},
                          {"seeds", seeds},
                          {"aggregate", "aggregate.csv"},
                          {"runs", runs},
                          {"groups", groups}};
    write_json(root / "summary.json", summary);
    write_json(fs::path(agg.string() + ".json"),
               {{"schema_version", kTraceSchemaVersion}, {"command", command}, {"tool", kToolVersion},
                {"file", "aggregate.csv"}, {"traces", "traces/"}, {"time_points", time_points}});
    out << json{{"groups", groups}, {"out", root.string()}}.dump(2) << '\n';
    return kExitSuccess;
}

json spectrum_json(const SpectrumReport& r) {
    return {{"lambda_m", r.lambda_m}, {"lambda_M", r.lambda_M}, {"kappa", finite_or_null(r.kappa)},
            {"dimension", r.eigenvalues.size()}};
}

int cmd_spectrum(const DatasetOptions& d, const PreprocessOptions& p, const SolverOptions& so, std::uint64_t seed,
                 const std::string& space, const std::string& out_dir, const std::string& command, std::ostream& out,
                 std::ostream& err) {
    const Dataset ds = build_dataset(d, seed);
    const Prepared prep = preprocess(ds.x, p);
    const Index n = prep.z.rows();
    if (n > kMaxHessianSources) {
        std::ostringstream msg;
        msg << "spectrum: N = " << n << " exceeds the materialization limit of " << kMaxHessianSources
            << " signals; use --pca to reduce";
        throw SizeGuardError(msg.str());
    }
    const ScoreModel score = ScoreModel::from_name(so.score);
    const SolverConfig cfg = make_config(so, Policy::PreconditionedLbfgs, false);
    ensure_dir(out_dir);

    json header = {{"command", command},
                   {"tool", kToolVersion},
                   {"seed", seed},
                   {"config", config_json(cfg, score)},
                   {"dataset", provenance_json(ds.provenance)},
                   {"preprocessing", prep.description},
                   {"space", space}};
    TracedFit tf =
        traced_fit(prep.z, score, cfg, Matrix::Identity(n, n), fs::path(out_dir) / "trace.jsonl", header);
    if (!tf.result) {
        err << "spectrum: fit failed: " << tf.summary.value("error", "") << '\n';
        return kExitNumericalFailure;
    }
    const FitResult& r = *tf.result;
    if (!r.converged) err << "spectrum: warning: fit stopped with status " << r.stop_reason << '\n';

    const bool constrained = space == "constrained";
    auto spectrum = [&](const Matrix& h, const Matrix& h_hat) {
        return constrained ? constrained_spectrum(h, h_hat) : preconditioned_spectrum(h, h_hat);
    };

    const Matrix h = materialize_full_hessian(full_hessian(r.y, score));
    const ApproxHessianCoeffs coeffs = approx_hessian(r.y, score);
    const Index dim = h.rows();

    json summary = header;
    summary.erase("tool");
    summary["schema_version"] = kTraceSchemaVersion;
    summary["fit"] = tf.summary;
    summary["fit"].erase("schema_version");
    summary["approximations"] = json::object();
    auto record = [&](const std::string& name, const SpectrumReport& rep) {
        const fs::path path = fs::path(out_dir) / ("spectrum-" + name + ".csv");
        json prov = header;
        prov["approximation"] = name;
        write_values(path, rep.eigenvalues, prov);
        json j = spectrum_json(rep);
        j["file"] = path.filename().string();
        summary["approximations"][name] = j;
    };

    record("identity", spectrum(h, Matrix::Identity(dim, dim)));
    record("simple", spectrum(h, materialize_simple_hessian(coeffs, cfg.lambda_floor)));
    if (n <= kMaxPreconditionerSources) {
        const Matrix hp_inv = materialize_preconditioner_inverse(r.memory, coeffs, cfg.lambda_floor);
        Matrix hp = solve_spd(hp_inv, Matrix(Matrix::Identity(dim, dim)));
        hp = 0.5 * (hp + hp.transpose());
        record("picard", spectrum(h, hp));
        summary["memory_pairs"] = r.memory.size();
    } else {
        err << "spectrum: N = " << n << " exceeds " << kMaxPreconditionerSources
            << "; skipping the picard approximation\n";
        summary["approximations"]["picard"] = nullptr;
    }
    try {
        summary["self_check"] = spectrum_json(spectrum(h, h));
    } catch (const NotSpdError&) {
        summary["self_check"] = {{"skipped", "H is not positive definite at the fitted point"}};
    }
    write_json(fs::path(out_dir) / "spectrum.json", summary);
    out << summary["approximations"].dump(2) << '\n';
    return kExitSuccess;
}

int classify(const std::exception& e) {
    if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ContractError*>(&e) ||
        dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const SizeGuardError*>(&e) ||
        dynamic_cast<const ParseError*>(&e) || dynamic_cast<const FormatError*>(&e)) {
        return kExitUsage;
    }
    return kExitNumericalFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Relative quasi-Newton ICA: generate data, fit, benchmark, inspect Hessian spectra", "picardkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    const std::string command = joined_command(args);

    // generate
    DatasetOptions gen_data;
    std::uint64_t gen_seed = 0;
    std::string gen_out = ".";
    std::string gen_format = "f64";
    auto* gen = app.add_subcommand("generate", "Write a dataset (X, plus A and S when generated)");
    add_dataset_options(gen, gen_data, false);
    gen->add_option("--seed", gen_seed, "Random seed")->required();
    gen->add_option("--out", gen_out, "Output directory");
    gen->add_option("--format", gen_format, "Matrix file format")->check(CLI::IsMember({"f64", "csv"}));

    // whiten
    std::string wh_input;
    std::string wh_output;
    std::string wh_whitener;
    PreprocessOptions wh_pre;
    auto* wh = app.add_subcommand("whiten", "Center and ZCA-whiten a signal matrix");
    wh->add_option("--input", wh_input, "Signal matrix")->required()->check(CLI::ExistingFile);
    wh->add_option("--out", wh_output, "Whitened matrix")->required();
    wh->add_option("--whitener", wh_whitener, "Also write the whitening matrix here");
    add_preprocess_options(wh, wh_pre, false);

    // fit
    std::string fit_input;
    std::string fit_out = "fit-out";
    std::string fit_format = "f64";
    std::string fit_mixing;
    PreprocessOptions fit_pre;
    SolverOptions fit_solver;
    auto* fitc = app.add_subcommand("fit", "Run one fit and write W, Y, a trace and a summary");
    fitc->add_option("--input", fit_input, "Signal matrix")->required()->check(CLI::ExistingFile);
    fitc->add_option("--out", fit_out, "Output directory");
    fitc->add_option("--format", fit_format, "Matrix file format")->check(CLI::IsMember({"f64", "csv"}));
    fitc->add_option("--mixing", fit_mixing, "True mixing matrix; reports the Amari distance")
        ->check(CLI::ExistingFile);
    add_preprocess_options(fitc, fit_pre, true);
    add_solver_options(fitc, fit_solver, true);

    // benchmark
    DatasetOptions bench_data;
    PreprocessOptions bench_pre;
    SolverOptions bench_solver;
    std::string bench_algorithms = "gradient,fr-newton,picard";
    std::string bench_modes = "unconstrained,constrained";
    std::string bench_seeds;
    std::string bench_out;
    double bench_target = 1e-6;
    std::size_t bench_points = 200;
    auto* bench = app.add_subcommand("benchmark", "Run algorithms x modes x seeds and aggregate the traces");
    add_dataset_options(bench, bench_data, true);
    add_preprocess_options(bench, bench_pre, false);
    add_solver_options(bench, bench_solver, false);
    bench->add_option("--algorithms", bench_algorithms, "Comma-separated policies");
    bench->add_option("--modes", bench_modes, "Comma-separated modes (unconstrained, constrained)");
    bench->add_option("--seeds", bench_seeds, "Seeds, e.g. 1-10 or 1,4,7")->required();
    bench->add_option("--out", bench_out, "Output directory")->required();
    bench->add_option("--target", bench_target, "Gradient norm for the iterations-to-target statistic")
        ->check(CLI::PositiveNumber);
    bench->add_option("--time-points", bench_points, "Grid size of the time axis")->check(CLI::Range(2, 100000));

    // spectrum
    DatasetOptions spec_data;
    PreprocessOptions spec_pre;
    SolverOptions spec_solver;
    std::uint64_t spec_seed = 1;
    std::string spec_space = "full";
    std::string spec_out;
    auto* spec = app.add_subcommand("spectrum", "Spectra of the preconditioned Hessian at a fitted optimum");
    add_dataset_options(spec, spec_data, true);
    add_preprocess_options(spec, spec_pre, false);
    add_solver_options(spec, spec_solver, false);
    spec->add_option("--seed", spec_seed, "Random seed of the dataset");
    spec->add_option("--space", spec_space, "Matrix space of the spectrum")
        ->check(CLI::IsMember({"full", "constrained"}));
    spec->add_option("--out", spec_out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitSuccess;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return kExitSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*gen) return cmd_generate(gen_data, gen_seed, gen_out, gen_format, command, out);
        if (*wh) return cmd_whiten(wh_input, wh_output, wh_whitener, wh_pre, command, out);
        if (*fitc) {
            return cmd_fit(fit_input, fit_out, fit_format, fit_mixing, fit_pre, fit_solver, command, out, err);
        }
        if (*bench) {
            return cmd_benchmark(bench_data, bench_pre, bench_solver, bench_algorithms, bench_modes, bench_seeds,
                                 bench_out, bench_target, bench_points, command, out, err);
        }
        if (*spec) {
            return cmd_spectrum(spec_data, spec_pre, spec_solver, spec_seed, spec_space, spec_out, command, out,
                                err);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return classify(e);
    }
    return kExitUsage;
}

}  // namespace picardkit
