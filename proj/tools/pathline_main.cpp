#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pathline/cli.hpp"

namespace {

using pathline::CliOverrides;

// Shared flag set; each subcommand attaches the subset it understands.
struct FlagValues {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::string tolerance;
  std::string split;
  int points = 0;
  bool points_set = false;
};

void add_common_flags(CLI::App* cmd, FlagValues& v, bool needs_config) {
  auto* config = cmd->add_option("--config", v.config,
                                 "experiment configuration (JSON)");
  config->check(CLI::ExistingFile);
  if (needs_config) config->required();
  cmd->add_option("--seed", v.seed, "train this single seed instead of the configured list")
      ->each([&v](const std::string&) { v.seed_set = true; });
  cmd->add_option("--out", v.out, "output directory (overrides config and PATHLINE_OUT)");
  cmd->add_option("--tolerance", v.tolerance,
                  "shape tolerances, e.g. rise=0.05,plateau=0.05,span=0.6");
  cmd->add_option("--split", v.split, "evaluation split for paths")
      ->check(CLI::IsMember({"train", "test"}));
  cmd->add_option("--points", v.points, "grid points per path (>= 3)")
      ->each([&v](const std::string&) { v.points_set = true; });
}

CliOverrides to_overrides(const FlagValues& v) {
  CliOverrides ov;
  if (v.seed_set) ov.seed = v.seed;
  ov.out = v.out;
  if (!v.tolerance.empty()) ov.tolerances = pathline::parse_tolerance_flag(v.tolerance);
  if (!v.split.empty()) ov.split = pathline::split_from_string(v.split);
  if (v.points_set) ov.points = v.points;
  return ov;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"train small dense networks and probe the loss surface along "
               "linear interpolation paths"};
  app.require_subcommand(1);

  FlagValues train_v, interp_v, protocol_v;
  std::string interp_a, interp_b, interp_select = "all";
  std::vector<std::string> plot_inputs, report_dirs;
  std::string plot_out = "plot.svg", report_out;

  CLI::App* train = app.add_subcommand(
      "train", "train every configured seed; write records and checkpoints");
  add_common_flags(train, train_v, true);

  CLI::App* interp = app.add_subcommand(
      "interp", "interpolate between two checkpoints over the configured data");
  add_common_flags(interp, interp_v, true);
  interp->add_option("a", interp_a, "first endpoint checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  interp->add_option("b", interp_b, "second endpoint checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  interp->add_option("--select", interp_select,
                     "parameters to vary: all | layers:0,2 | groups:bias");

  CLI::App* protocol = app.add_subcommand(
      "protocol", "run the configured protocol with its baseline comparison");
  add_common_flags(protocol, protocol_v, true);

  CLI::App* plot =
      app.add_subcommand("plot", "render path CSVs as one SVG line chart");
  plot->add_option("csvs", plot_inputs, "path CSV files")->expected(-1);
  plot->add_option("--out", plot_out, "output SVG file");

  CLI::App* report = app.add_subcommand(
      "report", "aggregate record files by config digest (mean / std)");
  report->add_option("dirs", report_dirs, "directories to scan recursively")
      ->expected(-1);
  report->add_option("--out", report_out, "also write the table to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return pathline::cmd_train(train_v.config, to_overrides(train_v),
                                 std::cout, std::cerr);
    if (interp->parsed())
      return pathline::cmd_interp(interp_v.config, interp_a, interp_b,
                                  interp_select, to_overrides(interp_v),
                                  std::cout, std::cerr);
    if (protocol->parsed())
      return pathline::cmd_protocol(protocol_v.config, to_overrides(protocol_v),
                                    std::cout, std::cerr);
    if (plot->parsed()) {
      std::vector<std::filesystem::path> paths(plot_inputs.begin(),
                                               plot_inputs.end());
      return pathline::cmd_plot(paths, plot_out, std::cout, std::cerr);
    }
    if (report->parsed()) {
      std::vector<std::filesystem::path> paths(report_dirs.begin(),
                                               report_dirs.end());
      return pathline::cmd_report(paths, report_out, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    // Flag-level parse helpers (tolerance / split) throw before a command runs.
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
