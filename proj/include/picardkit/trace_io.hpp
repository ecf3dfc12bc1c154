#pragma once

#include <filesystem>
#include <fstream>
#include <optional>

#include "json.hpp"

#include "picardkit/solver.hpp"

namespace picardkit {

/// Version stamped into every trace header and summary file. Readers
/// refuse anything else.
inline constexpr int kTraceSchemaVersion = 1;

/// One JSON object per line:
///   {"type":"header","schema_version":1,...}
///   {"type":"iteration","iter":0,"t_sec":...,"loss":...,"gnorm":...,"alpha":...,"backtracks":...,"dloss":...}
///   {"type":"summary",...}   (absent when the run died)
nlohmann::json record_to_json(const IterationRecord& r);
IterationRecord record_from_json(const nlohmann::json& j);

/// Streams a trace to disk, flushing after every record so a crashed run
/// leaves a readable prefix.
class TraceWriter {
public:
    TraceWriter(const std::filesystem::path& path, nlohmann::json header);

    void write(const IterationRecord& r);
    void finish(nlohmann::json summary);

    const std::filesystem::path& path() const { return path_; }

private:
    void emit(const nlohmann::json& j);

    std::filesystem::path path_;
    std::ofstream out_;
};

struct TraceFile {
    nlohmann::json header;
    Trace records;
    std::optional<nlohmann::json> summary;
};

/// Parses and validates a trace. Throws ParseError with the line number on
/// malformed JSON and FormatError on schema problems (unknown version,
/// missing header, non-consecutive iterations).
TraceFile read_trace(const std::filesystem::path& path);

/// Writes `j` pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace picardkit
