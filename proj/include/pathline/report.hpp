#pragma once

// Result persistence: checkpoints and run records as documented JSON, sampled
// paths as CSV, comparison tables, and SVG line charts. Every file embeds the
// tool version and the digest of the configuration that produced it, numbers
// are written as exact shortest round-trip decimals, and writes go through a
// temp-then-rename so readers never see partial files.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathline/protocols.hpp"

namespace pathline {

inline constexpr int kCheckpointFormatVersion = 1;

// --- JSON building blocks -------------------------------------------------

nlohmann::json model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const ParamState& params);
ParamState params_from_json(const nlohmann::json& j, const ModelSpec& spec);

nlohmann::json run_record_to_json(const RunRecord& rec,
                                  const std::string& config_digest);
RunRecord run_record_from_json(const nlohmann::json& j);

// --- Checkpoint files -----------------------------------------------------

struct CheckpointFile {
  int format_version = kCheckpointFormatVersion;
  std::string tool_version = std::string(kToolVersion);
  std::string config_digest;
  int epoch = 0;  // completed epochs when the state was captured
  ModelSpec model;
  ParamState params;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointFile& ck);
CheckpointFile load_checkpoint(const std::filesystem::path& path);

// --- Run records ----------------------------------------------------------

void save_run_record(const std::filesystem::path& path, const RunRecord& rec,
                     const std::string& config_digest);
RunRecord load_run_record(const std::filesystem::path& path);

// Reads only the summary fields of a record file (cheap for aggregation).
struct RecordDigestInfo {
  std::string config_digest;
  std::uint64_t seed = 0;
  bool failed = false;
  EvalMetrics final_eval;
};
RecordDigestInfo peek_run_record(const std::filesystem::path& path);

// --- Path CSV -------------------------------------------------------------

// Header comments carry the provenance; the body is alpha,loss,accuracy.
void save_path_csv(const std::filesystem::path& path, const InterpPath& p,
                   const std::string& config_digest, std::uint64_t seed);

struct LoadedPath {
  InterpPath path;
  std::map<std::string, std::string> metadata;  // "# key: value" lines
};
LoadedPath load_path_csv(const std::filesystem::path& path);

nlohmann::json shape_to_json(const PathShape& shape,
                             const std::string& config_digest,
                             std::uint64_t seed);
void save_shape_json(const std::filesystem::path& path, const PathShape& shape,
                     const std::string& config_digest, std::uint64_t seed);

// --- Comparison tables ----------------------------------------------------

std::string comparison_csv(const std::vector<ComparisonRow>& rows,
                           const std::string& config_digest);
std::string comparison_text(const std::vector<ComparisonRow>& rows);

// --- SVG charts -----------------------------------------------------------

struct PlotSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
};

std::string svg_line_chart(const std::vector<PlotSeries>& series,
                           const std::string& title, const std::string& x_label,
                           const std::string& y_label);

}  // namespace pathline
