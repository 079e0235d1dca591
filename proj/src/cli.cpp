#include "pathline/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pathline {

namespace fs = std::filesystem;

namespace {

ExperimentConfig load_with_overrides(const fs::path& config_path,
                                     const CliOverrides& ov) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  if (ov.seed) cfg.seeds = {*ov.seed};
  if (ov.tolerances) cfg.tolerances = *ov.tolerances;
  if (ov.split) cfg.eval_split = *ov.split;
  if (ov.points) cfg.points = *ov.points;
  cfg.validate();
  return cfg;
}

void write_config_echo(const fs::path& root, const ExperimentConfig& cfg) {
  write_file_atomic(root / "config.json", cfg.to_json().dump(2) + "\n");
}

// Comparison rows double as directory names, so squash the characters that
// selectors and augment specs use.
std::string slug(std::string name) {
  for (char& c : name)
    if (c == ':' || c == ',' || c == ' ' || c == '/') c = '_';
  return name;
}

// Sub-runs of a sweep (width plans, data cells) train under configurations
// that differ from the parent experiment, so their records carry a digest
// derived from the parent digest plus the sub-run name.
std::string sub_digest(const std::string& digest, const std::string& tag) {
  Fnv1a h;
  h.update(digest);
  h.update(":");
  h.update(tag);
  return digest_hex(h.value());
}

void save_scratch_bundle(const fs::path& dir, const ScratchOutcome& o,
                         const std::string& digest) {
  fs::create_directories(dir);
  save_run_record(dir / "record.json", o.record, digest);
  save_path_csv(dir / "path-full.csv", o.full.path, digest, o.seed);
  save_shape_json(dir / "path-full.shape.json", o.full.shape, digest, o.seed);
  for (std::size_t l = 0; l < o.layers.size(); ++l) {
    const std::string stem = "path-layer-" + std::to_string(l);
    save_path_csv(dir / (stem + ".csv"), o.layers[l].path, digest, o.seed);
    save_shape_json(dir / (stem + ".shape.json"), o.layers[l].shape, digest,
                    o.seed);
  }
}

void save_scratch_result(const fs::path& root, const ScratchResult& r,
                         const std::string& digest) {
  for (const ScratchOutcome& o : r.outcomes)
    save_scratch_bundle(root / ("seed-" + std::to_string(o.seed)), o, digest);
}

void save_checkpoint_pair(const fs::path& dir, const RunRecord& rec,
                          const std::string& digest) {
  CheckpointFile ck;
  ck.config_digest = digest;
  ck.model = rec.spec;
  ck.epoch = 0;
  ck.params = rec.init_params;
  save_checkpoint(dir / "init.checkpoint.json", ck);
  ck.epoch = static_cast<int>(rec.epochs.size());
  ck.params = rec.final_params;
  save_checkpoint(dir / "final.checkpoint.json", ck);
}

void write_comparison(const fs::path& root,
                      const std::vector<ComparisonRow>& rows,
                      const std::string& digest, std::ostream& out) {
  write_file_atomic(root / "comparison.csv", comparison_csv(rows, digest));
  const std::string text = comparison_text(rows);
  write_file_atomic(root / "comparison.txt", text);
  out << text;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<double> sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return std::nullopt;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ShapeTolerances parse_tolerance_flag(const std::string& text) {
  ShapeTolerances t;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.empty()) continue;
    const std::size_t eq = part.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("tolerance: expected name=value, got '" +
                                  part + "'");
    const std::string name = part.substr(0, eq);
    const double value = parse_double(part.substr(eq + 1));
    if (name == "rise")
      t.rise_tol = value;
    else if (name == "plateau")
      t.plateau_tol = value;
    else if (name == "span")
      t.plateau_span = value;
    else
      throw std::invalid_argument("tolerance: unknown part '" + name +
                                  "' (rise, plateau, span)");
  }
  t.validate();
  return t;
}

fs::path resolve_output_dir(const ExperimentConfig& cfg, const CliOverrides& ov) {
  if (!ov.out.empty()) return ov.out;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("PATHLINE_OUT"); env && *env) return env;
  return "runs";
}

int cmd_train(const fs::path& config_path, const CliOverrides& ov,
              std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_with_overrides(config_path, ov);
    const std::string digest = cfg.digest();
    const ProtocolBase base = cfg.build_base();
    const fs::path root = resolve_output_dir(cfg, ov);
    fs::create_directories(root);
    write_config_echo(root, cfg);

    bool any_failed = false;
    for (std::uint64_t seed : cfg.seeds) {
      TrainConfig tc = base.training;
      tc.shuffle_seed = seed;
      RunRecord rec = train(base.model, init_params(base.model, seed),
                            base.data, base.optim, tc);
      rec.seed = seed;
      const fs::path dir = root / ("seed-" + std::to_string(seed));
      fs::create_directories(dir);
      save_run_record(dir / "record.json", rec, digest);
      save_checkpoint_pair(dir, rec, digest);
      CheckpointFile ck;
      ck.config_digest = digest;
      ck.model = base.model;
      for (const ParamCheckpoint& pc : rec.checkpoints) {
        ck.epoch = pc.epochs_done;
        ck.params = pc.params;
        save_checkpoint(dir / ("epoch-" + std::to_string(pc.epochs_done) +
                               ".checkpoint.json"),
                        ck);
      }
      if (rec.failed) {
        any_failed = true;
        err << "train: seed " << seed << " failed: " << rec.failure << "\n";
      } else {
        const EvalMetrics& ev = rec.final_eval();
        out << "seed " << seed << ": " << ev.epochs_done
            << " epochs, train loss " << format_double(ev.train_loss)
            << ", test accuracy " << format_double(ev.test_accuracy) << "\n";
      }
    }
    out << "config " << digest << " -> " << root.string() << "\n";
    return any_failed ? 1 : 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_interp(const fs::path& config_path, const fs::path& checkpoint_a,
               const fs::path& checkpoint_b, const std::string& selector,
               const CliOverrides& ov, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_with_overrides(config_path, ov);
    const std::string digest = cfg.digest();
    const CheckpointFile ca = load_checkpoint(checkpoint_a);
    const CheckpointFile cb = load_checkpoint(checkpoint_b);
    if (ca.model.hash() != cb.model.hash())
      throw std::invalid_argument(
          "interp: checkpoints carry incompatible model specs");
    const LayerSelector sel = LayerSelector::parse(selector);
    const Dataset data = cfg.dataset.build();
    const InterpPath path = evaluate_path(ca.model, ca.params, cb.params, sel,
                                          data, cfg.eval_split, cfg.points);
    const PathShape shape = classify(path, cfg.tolerances);

    const fs::path root = resolve_output_dir(cfg, ov);
    fs::create_directories(root);
    const std::uint64_t seed_label =
        ov.seed ? *ov.seed : (cfg.seeds.empty() ? 0 : cfg.seeds.front());
    save_path_csv(root / "path.csv", path, digest, seed_label);
    save_shape_json(root / "path.shape.json", shape, digest, seed_label);
    out << shape.describe() << "\n";
    out << "wrote " << (root / "path.csv").string() << " and "
        << (root / "path.shape.json").string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_protocol(const fs::path& config_path, const CliOverrides& ov,
                 std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_with_overrides(config_path, ov);
    const std::string digest = cfg.digest();
    const ProtocolBase base = cfg.build_base();
    const fs::path root = resolve_output_dir(cfg, ov);
    fs::create_directories(root);
    write_config_echo(root, cfg);

    if (cfg.seeds.empty()) {
      write_comparison(root, {}, digest, out);
      out << "no seeds configured; empty table\n";
      return 0;
    }

    const ProtocolConfig& pc = cfg.protocol;
    std::vector<ComparisonRow> rows;
    switch (pc.kind) {
      case ProtocolKind::Scratch: {
        const ScratchResult sc = run_scratch(base, cfg.seeds);
        save_scratch_result(root / "scratch", sc, digest);
        rows = summarize(summary_of(sc, "scratch"), {});
        break;
      }
      case ProtocolKind::AdversarialInit: {
        const ScratchResult sc = run_scratch(base, cfg.seeds);
        save_scratch_result(root / "scratch", sc, digest);
        const AdversarialResult adv =
            run_adversarial_init(base, cfg.seeds, pc.adversarial);
        for (const AdversarialOutcome& o : adv.outcomes) {
          const fs::path dir =
              root / "adversarial_init" / ("seed-" + std::to_string(o.seed));
          fs::create_directories(dir);
          save_run_record(dir / "phase-a.record.json", o.phase_a, digest);
          save_run_record(dir / "record.json", o.phase_b, digest);
          save_path_csv(dir / "path-full.csv", o.full.path, digest, o.seed);
          save_shape_json(dir / "path-full.shape.json", o.full.shape, digest,
                          o.seed);
        }
        rows = summarize(summary_of(sc, "scratch"),
                         {summary_of(adv, "adversarial_init")});
        break;
      }
      case ProtocolKind::HeightOfBarrierInit: {
        const ScratchResult sc = run_scratch(base, cfg.seeds);
        save_scratch_result(root / "scratch", sc, digest);
        const HeightResult hr = run_height_of_barrier(base, sc, pc.offset);
        const std::string name =
            "height_offset_" + std::to_string(pc.offset);
        for (const HeightOutcome& o : hr.outcomes) {
          const fs::path dir = root / name / ("seed-" + std::to_string(o.seed));
          fs::create_directories(dir);
          save_run_record(dir / "record.json", o.record, digest);
          save_path_csv(dir / "path-full.csv", o.full.path, digest, o.seed);
          save_shape_json(dir / "path-full.shape.json", o.full.shape, digest,
                          o.seed);
          const nlohmann::json meta{
              {"tool_version", kToolVersion},
              {"config_digest", digest},
              {"seed", o.seed},
              {"offset", o.offset},
              {"start_alpha", o.start_alpha},
              {"threshold", o.threshold},
              {"epochs_to_threshold", o.epochs_to_threshold},
              {"scratch_epochs_to_threshold", o.scratch_epochs_to_threshold},
              {"scratch_test_accuracy", o.scratch_test_accuracy}};
          write_file_atomic(dir / "height.json", meta.dump(2) + "\n");
        }
        rows = summarize(summary_of(sc, "scratch"), {summary_of(hr, name)});
        break;
      }
      case ProtocolKind::PartialReset: {
        const ScratchResult sc = run_scratch(base, cfg.seeds);
        save_scratch_result(root / "scratch", sc, digest);
        PartialResetResult pr;
        if (pc.reset_source == ResetSource::Trained) {
          pr = run_partial_reset(base, sc, pc.reset_selector);
        } else {
          const Dataset source = pc.source_dataset->build();
          pr = run_partial_reset(base, cfg.seeds, pc.reset_selector,
                                 ResetSource::Pretrained, &source);
        }
        std::string name = "partial_reset_" + slug(pc.reset_selector.to_string());
        if (pc.reset_source == ResetSource::Pretrained) name += "_pretrained";
        for (const PartialResetOutcome& o : pr.outcomes) {
          const fs::path dir = root / name / ("seed-" + std::to_string(o.seed));
          fs::create_directories(dir);
          save_run_record(dir / "record.json", o.record, digest);
          save_path_csv(dir / "path-full.csv", o.full.path, digest, o.seed);
          save_shape_json(dir / "path-full.shape.json", o.full.shape, digest,
                          o.seed);
          const nlohmann::json meta{
              {"tool_version", kToolVersion},
              {"config_digest", digest},
              {"seed", o.seed},
              {"selector", pc.reset_selector.to_string()},
              {"source", to_string(pc.reset_source)},
              {"source_digest", digest_hex(o.source_digest)}};
          write_file_atomic(dir / "reset.json", meta.dump(2) + "\n");
        }
        rows = summarize(summary_of(sc, "scratch"), {summary_of(pr, name)});
        break;
      }
      case ProtocolKind::PretrainTransfer: {
        const ScratchResult sc = run_scratch(base, cfg.seeds);
        save_scratch_result(root / "scratch", sc, digest);
        const Dataset source = pc.source_dataset->build();
        const PretrainResult tr =
            run_pretrain_transfer(base, source, cfg.seeds);
        for (const PretrainOutcome& o : tr.outcomes) {
          const fs::path dir =
              root / "pretrain_transfer" / ("seed-" + std::to_string(o.seed));
          fs::create_directories(dir);
          save_run_record(dir / "phase-a.record.json", o.phase_a, digest);
          save_run_record(dir / "record.json", o.phase_b, digest);
          save_path_csv(dir / "path-full.csv", o.full.path, digest, o.seed);
          save_shape_json(dir / "path-full.shape.json", o.full.shape, digest,
                          o.seed);
        }
        rows = summarize(summary_of(sc, "scratch"),
                         {summary_of(tr, "pretrain_transfer")});
        break;
      }
      case ProtocolKind::PerGroupHyper: {
        const ScratchResult sc = run_scratch(base, cfg.seeds);
        save_scratch_result(root / "scratch", sc, digest);
        const PerGroupResult pg =
            run_per_group_hyper(base, sc, pc.regime, pc.knob, pc.factor);
        const std::string name = "per_group_" + to_string(pc.regime) + "_" +
                                 to_string(pc.knob) + "_" +
                                 format_double(pc.factor);
        for (const PerGroupOutcome& o : pg.outcomes) {
          const fs::path dir = root / name / ("seed-" + std::to_string(o.seed));
          fs::create_directories(dir);
          save_run_record(dir / "record.json", o.record, digest);
          save_path_csv(dir / "path-full.csv", o.full.path, digest, o.seed);
          save_shape_json(dir / "path-full.shape.json", o.full.shape, digest,
                          o.seed);
          for (std::size_t l = 0; l < o.layers.size(); ++l) {
            const std::string stem = "path-layer-" + std::to_string(l);
            save_path_csv(dir / (stem + ".csv"), o.layers[l].path, digest,
                          o.seed);
            save_shape_json(dir / (stem + ".shape.json"), o.layers[l].shape,
                            digest, o.seed);
          }
          nlohmann::json tags = nlohmann::json::array();
          for (ShapeTag t : o.stage1_layer_tags) tags.push_back(to_string(t));
          const nlohmann::json meta{{"tool_version", kToolVersion},
                                    {"config_digest", digest},
                                    {"seed", o.seed},
                                    {"baseline_layer_tags", tags},
                                    {"override_layers", o.override_layers}};
          write_file_atomic(dir / "groups.json", meta.dump(2) + "\n");
        }
        rows = summarize(summary_of(sc, "scratch"), {summary_of(pg, name)});
        break;
      }
      case ProtocolKind::WidthSweep: {
        const WidthSweepResult ws = run_width_sweep(base, cfg.seeds);
        std::vector<InterventionSummary> rest;
        for (std::size_t p = 0; p < ws.plans.size(); ++p) {
          const std::string& name = ws.plans[p].name;
          save_scratch_result(root / name, ws.per_plan[p],
                              sub_digest(digest, "plan:" + name));
          if (p > 0) rest.push_back(summary_of(ws.per_plan[p], name));
        }
        rows = summarize(summary_of(ws.per_plan[0], ws.plans[0].name), rest);
        break;
      }
      case ProtocolKind::DataSweep: {
        const DataSweepResult ds =
            run_data_sweep(base, pc.fractions, pc.augments, cfg.seeds);
        std::vector<InterventionSummary> rest;
        InterventionSummary baseline;
        for (std::size_t c = 0; c < ds.cells.size(); ++c) {
          const DataCell& cell = ds.cells[c];
          const std::string name = "fraction_" + format_double(cell.fraction) +
                                   "_" + slug(cell.augment.to_string());
          save_scratch_result(root / name, ds.per_cell[c],
                              sub_digest(digest, "cell:" + name));
          if (c == 0)
            baseline = summary_of(ds.per_cell[c], name);
          else
            rest.push_back(summary_of(ds.per_cell[c], name));
        }
        rows = summarize(baseline, rest);
        break;
      }
    }

    write_comparison(root, rows, digest, out);
    out << "config " << digest << " -> " << root.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_plot(const std::vector<fs::path>& csvs, const fs::path& out_file,
             std::ostream& out, std::ostream& err) {
  if (csvs.empty()) {
    err << "plot: no input files\n";
    return 1;
  }
  try {
    std::vector<PlotSeries> series;
    for (const fs::path& p : csvs) {
      LoadedPath lp = load_path_csv(p);
      std::string label;
      if (auto it = lp.metadata.find("varied"); it != lp.metadata.end())
        label = it->second;
      if (auto it = lp.metadata.find("seed"); it != lp.metadata.end())
        label += (label.empty() ? "seed " : " seed ") + it->second;
      if (label.empty()) label = p.stem().string();
      series.push_back({std::move(label), lp.path.alphas, lp.path.losses});
    }
    for (std::size_t s = 1; s < series.size(); ++s)
      if (series[s].xs != series[0].xs) {
        err << "plot: alpha grids differ between inputs; each series is drawn "
               "on its own grid\n";
        break;
      }
    write_file_atomic(out_file,
                      svg_line_chart(series, "loss along the interpolation path",
                                     "alpha", "loss"));
    out << "wrote " << out_file.string() << " (" << series.size()
        << (series.size() == 1 ? " series)" : " series)") << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_report(const std::vector<fs::path>& dirs, const std::string& out_file,
               std::ostream& out, std::ostream& err) {
  if (dirs.empty()) {
    err << "report: no directories given\n";
    return 1;
  }
  std::map<std::string, std::vector<RecordDigestInfo>> groups;
  for (const fs::path& dir : dirs) {
    if (!fs::is_directory(dir)) {
      err << "report: skipping " << dir.string() << " (not a directory)\n";
      continue;
    }
    for (const fs::directory_entry& entry :
         fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file() ||
          entry.path().filename() != "record.json")
        continue;
      try {
        RecordDigestInfo info = peek_run_record(entry.path());
        groups[info.config_digest].push_back(std::move(info));
      } catch (const std::exception& e) {
        err << "report: skipping " << entry.path().string() << ": " << e.what()
            << "\n";
      }
    }
  }
  if (groups.empty()) {
    err << "report: no record files found\n";
    return 1;
  }

  std::ostringstream text;
  for (auto& [digest, infos] : groups) {
    std::sort(infos.begin(), infos.end(),
              [](const RecordDigestInfo& a, const RecordDigestInfo& b) {
                return a.seed < b.seed;
              });
    std::vector<double> acc, loss;
    int failed = 0;
    for (const RecordDigestInfo& info : infos) {
      if (info.failed) {
        ++failed;
        continue;
      }
      acc.push_back(info.final_eval.test_accuracy);
      loss.push_back(info.final_eval.test_loss);
    }
    text << "config " << digest << ": " << infos.size()
         << (infos.size() == 1 ? " record" : " records");
    if (failed > 0) text << " (" << failed << " failed)";
    text << "\n";
    if (acc.empty()) {
      text << "  no successful runs\n";
      continue;
    }
    char line[128];
    const auto stat_line = [&](const char* label, const std::vector<double>& v) {
      if (auto sd = sample_std(v)) {
        std::snprintf(line, sizeof(line), "  %-14s mean %.6f  std %.6f\n",
                      label, mean_of(v), *sd);
      } else {
        std::snprintf(line, sizeof(line),
                      "  %-14s mean %.6f  (std omitted: single seed)\n", label,
                      mean_of(v));
      }
      text << line;
    };
    stat_line("test accuracy", acc);
    stat_line("test loss", loss);
  }
  out << text.str();
  if (!out_file.empty()) {
    write_file_atomic(out_file, text.str());
    out << "wrote " << out_file << "\n";
  }
  return 0;
}

}  // namespace pathline
