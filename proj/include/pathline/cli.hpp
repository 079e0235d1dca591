#pragma once

// Command implementations behind the command-line tool. They live in the
// library so tests can drive them in-process; the binary is a thin argument
// parser around them. Commands never modify their inputs, write results
// through the atomic file helpers, and report problems on the error stream
// with a nonzero exit code.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pathline/config.hpp"
#include "pathline/report.hpp"

namespace pathline {

// Flag overrides shared by the config-driven commands. They are folded into
// the loaded configuration before its digest is computed, so the digest
// always names the effective experiment.
struct CliOverrides {
  std::optional<std::uint64_t> seed;  // replaces the configured seed list
  std::string out;                    // output root override
  std::optional<ShapeTolerances> tolerances;
  std::optional<Split> split;
  std::optional<int> points;
};

// "rise=0.05,plateau=0.02,span=0.5" -> tolerances; unnamed parts keep their
// defaults, unknown parts are rejected.
ShapeTolerances parse_tolerance_flag(const std::string& text);

// Output root: --out flag, then the config's output_dir, then the
// PATHLINE_OUT environment variable, then "runs".
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg,
                                         const CliOverrides& ov);

// Trains every configured seed and writes a record plus init/final (and any
// scheduled) checkpoints per seed.
int cmd_train(const std::filesystem::path& config_path, const CliOverrides& ov,
              std::ostream& out, std::ostream& err);

// Interpolates between two saved checkpoints over the configured dataset and
// writes the sampled path (CSV) and its classification (JSON).
int cmd_interp(const std::filesystem::path& config_path,
               const std::filesystem::path& checkpoint_a,
               const std::filesystem::path& checkpoint_b,
               const std::string& selector, const CliOverrides& ov,
               std::ostream& out, std::ostream& err);

// Runs the configured protocol with its baseline and writes record bundles
// plus the comparison table (CSV and aligned text).
int cmd_protocol(const std::filesystem::path& config_path,
                 const CliOverrides& ov, std::ostream& out, std::ostream& err);

// Renders saved path CSVs as one SVG line chart (loss vs alpha, one series
// per input, legend from each file's metadata).
int cmd_plot(const std::vector<std::filesystem::path>& csvs,
             const std::filesystem::path& out_file, std::ostream& out,
             std::ostream& err);

// Aggregates record files found under the given directories, grouped by the
// embedded config digest, reporting mean and sample std per group.
int cmd_report(const std::vector<std::filesystem::path>& dirs,
               const std::string& out_file, std::ostream& out,
               std::ostream& err);

}  // namespace pathline
