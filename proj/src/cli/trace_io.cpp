#include "picardkit/trace_io.hpp"

#include <sstream>
#include <string>

#include "picardkit/errors.hpp"

namespace picardkit {

using nlohmann::json;

json record_to_json(const IterationRecord& r) {
    return json{{"type", "iteration"},
                {"iter", r.iteration},
                {"t_sec", r.elapsed_seconds},
                {"loss", r.loss},
                {"gnorm", r.gradient_sup_norm},
                {"alpha", r.step_size},
                {"backtracks", r.backtracks},
                {"dloss", r.loss_decrease}};
}

IterationRecord record_from_json(const json& j) {
    IterationRecord r;
    r.iteration = j.at("iter").get<std::size_t>();
    r.elapsed_seconds = j.at("t_sec").get<double>();
    r.loss = j.at("loss").get<double>();
    r.gradient_sup_norm = j.at("gnorm").get<double>();
    r.step_size = j.at("alpha").get<double>();
    r.backtracks = j.at("backtracks").get<std::size_t>();
    r.loss_decrease = j.value("dloss", 0.0);
    return r;
}

TraceWriter::TraceWriter(const std::filesystem::path& path, json header) : path_(path), out_(path) {
    if (!out_) throw Error("cannot write trace '" + path.string() + "'");
    header["type"] = "header";
    header["schema_version"] = kTraceSchemaVersion;
    emit(header);
}

void TraceWriter::write(const IterationRecord& r) { emit(record_to_json(r)); }

void TraceWriter::finish(json summary) {
    summary["type"] = "summary";
    emit(summary);
}

void TraceWriter::emit(const json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
    if (!out_) throw Error("failed writing trace '" + path_.string() + "'");
}

TraceFile read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open trace '" + path.string() + "'");
    const std::string name = path.string();

    TraceFile out;
    bool have_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            std::ostringstream msg;
            msg << name << ": line " << line_no << ": " << e.what();
            throw ParseError(msg.str());
        }
        const std::string type = j.value("type", "");
        try {
            if (type == "header") {
                if (have_header) throw FormatError("duplicate header");
                if (j.value("schema_version", -1) != kTraceSchemaVersion) {
                    throw FormatError("unsupported schema_version " + j.value("schema_version", json()).dump());
                }
                out.header = std::move(j);
                have_header = true;
            } else if (type == "iteration") {
                if (!have_header) throw FormatError("iteration record before header");
                if (out.summary) throw FormatError("iteration record after summary");
                IterationRecord r = record_from_json(j);
                if (r.iteration != out.records.size()) throw FormatError("iterations are not consecutive");
                out.records.push_back(r);
            } else if (type == "summary") {
                if (!have_header) throw FormatError("summary before header");
                out.summary = std::move(j);
            } else {
                throw FormatError("unknown record type '" + type + "'");
            }
        } catch (const json::exception& e) {
            std::ostringstream msg;
            msg << name << ": line " << line_no << ": " << e.what();
            throw FormatError(msg.str());
        } catch (const FormatError& e) {
            std::ostringstream msg;
            msg << name << ": line " << line_no << ": " << e.what();
            throw FormatError(msg.str());
        }
    }
    if (!have_header) throw FormatError(name + ": no header record");
    return out;
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace picardkit
