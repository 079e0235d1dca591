#include "pathline/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace pathline {

namespace {

using nlohmann::json;

// Configs and result files reject keys they do not understand, so typos fail
// loudly instead of silently falling back to defaults.
void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object())
    throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

void require_key(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key))
    throw std::invalid_argument(where + ": missing key '" + key + "'");
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

json model_spec_to_json(const ModelSpec& spec) {
  return json{{"input_dim", spec.input_dim},
              {"hidden", spec.hidden_widths},
              {"output_dim", spec.output_dim},
              {"activation", to_string(spec.activation)},
              {"loss", to_string(spec.loss)}};
}

ModelSpec model_spec_from_json(const json& j) {
  check_keys(j, {"input_dim", "hidden", "output_dim", "activation", "loss"},
             "model");
  require_key(j, "input_dim", "model");
  require_key(j, "hidden", "model");
  ModelSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.hidden_widths = j.at("hidden").get<std::vector<int>>();
  spec.output_dim = j.value("output_dim", 1);
  spec.activation = activation_from_string(j.value("activation", "relu"));
  spec.loss = loss_from_string(
      j.value("loss", spec.num_classes() > 2 ? "softmax_ce" : "bce"));
  spec.validate();
  return spec;
}

json params_to_json(const ParamState& params) {
  json arr = json::array();
  for (const ParamEntry& e : params.entries)
    arr.push_back(json{{"layer", e.layer},
                       {"kind", to_string(e.kind)},
                       {"rows", e.rows},
                       {"cols", e.cols},
                       {"values", e.values}});
  return arr;
}

ParamState params_from_json(const json& j, const ModelSpec& spec) {
  if (!j.is_array()) throw std::invalid_argument("params: expected an array");
  ParamState out;
  out.spec_hash = spec.hash();
  const auto widths = spec.widths();
  if (j.size() != static_cast<std::size_t>(2 * spec.layer_count()))
    throw std::invalid_argument("params: expected " +
                                std::to_string(2 * spec.layer_count()) +
                                " entries, found " + std::to_string(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& je = j[i];
    const std::string where = "params[" + std::to_string(i) + "]";
    check_keys(je, {"layer", "kind", "rows", "cols", "values"}, where);
    ParamEntry e;
    e.layer = je.at("layer").get<int>();
    const std::string kind = je.at("kind").get<std::string>();
    if (kind != "weight" && kind != "bias")
      throw std::invalid_argument(where + ": unknown kind '" + kind + "'");
    e.kind = kind == "weight" ? ParamKind::Weight : ParamKind::Bias;
    e.rows = je.at("rows").get<int>();
    e.cols = je.at("cols").get<int>();
    e.values = je.at("values").get<std::vector<double>>();

    const int expect_layer = static_cast<int>(i) / 2;
    const bool expect_weight = i % 2 == 0;
    const int fan_in = widths[static_cast<std::size_t>(expect_layer)];
    const int fan_out = widths[static_cast<std::size_t>(expect_layer) + 1];
    if (e.layer != expect_layer || (e.kind == ParamKind::Weight) != expect_weight)
      throw std::invalid_argument(where + ": entries must be ordered "
                                          "weight,bias per layer");
    const int want_rows = fan_out;
    const int want_cols = expect_weight ? fan_in : 1;
    if (e.rows != want_rows || e.cols != want_cols)
      throw std::invalid_argument(
          where + ": shape " + std::to_string(e.rows) + "x" +
          std::to_string(e.cols) + " does not match the model (" +
          std::to_string(want_rows) + "x" + std::to_string(want_cols) + ")");
    if (e.values.size() != static_cast<std::size_t>(e.rows) *
                               static_cast<std::size_t>(e.cols))
      throw std::invalid_argument(where + ": value count does not match shape");
    out.entries.push_back(std::move(e));
  }
  return out;
}

namespace {

json eval_to_json(const EvalMetrics& ev) {
  return json{{"epochs_done", ev.epochs_done},
              {"train_loss", ev.train_loss},
              {"train_accuracy", ev.train_accuracy},
              {"test_loss", ev.test_loss},
              {"test_accuracy", ev.test_accuracy}};
}

EvalMetrics eval_from_json(const json& j) {
  check_keys(j, {"epochs_done", "train_loss", "train_accuracy", "test_loss",
                 "test_accuracy"},
             "eval");
  EvalMetrics ev;
  ev.epochs_done = j.at("epochs_done").get<int>();
  ev.train_loss = j.at("train_loss").get<double>();
  ev.train_accuracy = j.at("train_accuracy").get<double>();
  ev.test_loss = j.at("test_loss").get<double>();
  ev.test_accuracy = j.at("test_accuracy").get<double>();
  return ev;
}

}  // namespace

json run_record_to_json(const RunRecord& rec, const std::string& config_digest) {
  json epochs = json::array();
  for (const EpochMetrics& em : rec.epochs)
    epochs.push_back(json{{"epoch", em.epoch},
                          {"train_loss", em.train_loss},
                          {"train_accuracy", em.train_accuracy}});
  json evals = json::array();
  for (const EvalMetrics& ev : rec.evals) evals.push_back(eval_to_json(ev));
  json checkpoints = json::array();
  for (const ParamCheckpoint& ck : rec.checkpoints)
    checkpoints.push_back(json{{"epochs_done", ck.epochs_done},
                               {"params", params_to_json(ck.params)}});
  return json{{"tool_version", kToolVersion},
              {"config_digest", config_digest},
              {"seed", rec.seed},
              {"model", model_spec_to_json(rec.spec)},
              {"init_digest", digest_hex(rec.init_digest)},
              {"final_digest", digest_hex(rec.final_digest)},
              {"epochs", epochs},
              {"evals", evals},
              {"init_params", params_to_json(rec.init_params)},
              {"final_params", params_to_json(rec.final_params)},
              {"checkpoints", checkpoints},
              {"failed", rec.failed},
              {"failure", rec.failure}};
}

RunRecord run_record_from_json(const json& j) {
  check_keys(j,
             {"tool_version", "config_digest", "seed", "model", "init_digest",
              "final_digest", "epochs", "evals", "init_params", "final_params",
              "checkpoints", "failed", "failure"},
             "record");
  RunRecord rec;
  rec.spec = model_spec_from_json(j.at("model"));
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.init_params = params_from_json(j.at("init_params"), rec.spec);
  rec.final_params = params_from_json(j.at("final_params"), rec.spec);
  rec.init_digest = parse_digest_hex(j.at("init_digest").get<std::string>());
  rec.final_digest = parse_digest_hex(j.at("final_digest").get<std::string>());
  if (rec.init_params.digest() != rec.init_digest ||
      rec.final_params.digest() != rec.final_digest)
    throw std::invalid_argument(
        "record: stored digests do not match the stored parameters");
  for (const json& je : j.at("epochs")) {
    check_keys(je, {"epoch", "train_loss", "train_accuracy"}, "epochs");
    rec.epochs.push_back({je.at("epoch").get<int>(),
                          je.at("train_loss").get<double>(),
                          je.at("train_accuracy").get<double>()});
  }
  for (const json& je : j.at("evals")) rec.evals.push_back(eval_from_json(je));
  if (rec.evals.empty())
    throw std::invalid_argument("record: needs at least the initial evaluation");
  for (const json& je : j.at("checkpoints")) {
    check_keys(je, {"epochs_done", "params"}, "checkpoints");
    rec.checkpoints.push_back({je.at("epochs_done").get<int>(),
                               params_from_json(je.at("params"), rec.spec)});
  }
  rec.failed = j.at("failed").get<bool>();
  rec.failure = j.at("failure").get<std::string>();
  return rec;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointFile& ck) {
  ck.model.validate();
  const json j{{"format_version", ck.format_version},
               {"tool_version", ck.tool_version},
               {"config_digest", ck.config_digest},
               {"epoch", ck.epoch},
               {"model", model_spec_to_json(ck.model)},
               {"params", params_to_json(ck.params)}};
  write_file_atomic(path, j.dump(2) + "\n");
}

CheckpointFile load_checkpoint(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path));
  check_keys(j,
             {"format_version", "tool_version", "config_digest", "epoch",
              "model", "params"},
             "checkpoint");
  CheckpointFile ck;
  ck.format_version = j.at("format_version").get<int>();
  if (ck.format_version != kCheckpointFormatVersion)
    throw std::invalid_argument(
        "checkpoint: format version " + std::to_string(ck.format_version) +
        " is not supported (expected " +
        std::to_string(kCheckpointFormatVersion) + ")");
  ck.tool_version = j.at("tool_version").get<std::string>();
  ck.config_digest = j.at("config_digest").get<std::string>();
  ck.epoch = j.at("epoch").get<int>();
  ck.model = model_spec_from_json(j.at("model"));
  ck.params = params_from_json(j.at("params"), ck.model);
  return ck;
}

void save_run_record(const std::filesystem::path& path, const RunRecord& rec,
                     const std::string& config_digest) {
  write_file_atomic(path, run_record_to_json(rec, config_digest).dump(2) + "\n");
}

RunRecord load_run_record(const std::filesystem::path& path) {
  return run_record_from_json(json::parse(read_file(path)));
}

RecordDigestInfo peek_run_record(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path));
  RecordDigestInfo info;
  info.config_digest = j.at("config_digest").get<std::string>();
  info.seed = j.at("seed").get<std::uint64_t>();
  info.failed = j.at("failed").get<bool>();
  const json& evals = j.at("evals");
  if (evals.empty())
    throw std::invalid_argument("record: needs at least the initial evaluation");
  info.final_eval = eval_from_json(evals.back());
  return info;
}

void save_path_csv(const std::filesystem::path& path, const InterpPath& p,
                   const std::string& config_digest, std::uint64_t seed) {
  p.validate();
  std::ostringstream os;
  os << "# tool_version: " << kToolVersion << "\n";
  os << "# config_digest: " << config_digest << "\n";
  os << "# seed: " << seed << "\n";
  os << "# varied: " << p.varied.to_string() << "\n";
  os << "# split: " << to_string(p.eval_split) << "\n";
  os << "# init_digest: " << digest_hex(p.endpoint_init_digest) << "\n";
  os << "# final_digest: " << digest_hex(p.endpoint_final_digest) << "\n";
  os << "alpha,loss,accuracy\n";
  for (std::size_t i = 0; i < p.points(); ++i)
    os << format_double(p.alphas[i]) << ',' << format_double(p.losses[i]) << ','
       << format_double(p.accuracies[i]) << "\n";
  write_file_atomic(path, os.str());
}

LoadedPath load_path_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  LoadedPath out;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::size_t colon = line.find(':');
      if (colon == std::string::npos || colon < 2)
        throw std::invalid_argument("path csv: malformed metadata line '" +
                                    line + "'");
      std::string key = line.substr(1, colon - 1);
      std::string value = line.substr(colon + 1);
      const auto trim = [](std::string& s) {
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
        while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
      };
      trim(key);
      trim(value);
      out.metadata[key] = value;
      continue;
    }
    if (!saw_header) {
      if (line != "alpha,loss,accuracy")
        throw std::invalid_argument("path csv: expected header "
                                    "'alpha,loss,accuracy', found '" +
                                    line + "'");
      saw_header = true;
      continue;
    }
    std::size_t c1 = line.find(',');
    std::size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos)
      throw std::invalid_argument("path csv: malformed row '" + line + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.path.alphas.push_back(parse_double(line.substr(0, c1)));
    out.path.losses.push_back(parse_double(line.substr(c1 + 1, c2 - c1 - 1)));
    out.path.accuracies.push_back(parse_double(line.substr(c2 + 1)));
  }
  if (!saw_header) throw std::invalid_argument("path csv: no data header");
  if (auto it = out.metadata.find("varied"); it != out.metadata.end())
    out.path.varied = LayerSelector::parse(it->second);
  if (auto it = out.metadata.find("split"); it != out.metadata.end())
    out.path.eval_split = split_from_string(it->second);
  if (auto it = out.metadata.find("init_digest"); it != out.metadata.end())
    out.path.endpoint_init_digest = parse_digest_hex(it->second);
  if (auto it = out.metadata.find("final_digest"); it != out.metadata.end())
    out.path.endpoint_final_digest = parse_digest_hex(it->second);
  out.path.validate();
  return out;
}

json shape_to_json(const PathShape& shape, const std::string& config_digest,
                   std::uint64_t seed) {
  return json{{"tool_version", kToolVersion},
              {"config_digest", config_digest},
              {"seed", seed},
              {"tag", to_string(shape.tag)},
              {"summit_index", shape.summit_index},
              {"summit_alpha", shape.summit_alpha},
              {"height", shape.height},
              {"drop_index", shape.drop_index},
              {"drop_alpha", shape.drop_alpha},
              {"tolerances",
               json{{"rise", shape.tolerances.rise_tol},
                    {"plateau", shape.tolerances.plateau_tol},
                    {"span", shape.tolerances.plateau_span}}},
              {"description", shape.describe()}};
}

void save_shape_json(const std::filesystem::path& path, const PathShape& shape,
                     const std::string& config_digest, std::uint64_t seed) {
  write_file_atomic(path, shape_to_json(shape, config_digest, seed).dump(2) + "\n");
}

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

std::string comparison_csv(const std::vector<ComparisonRow>& rows,
                           const std::string& config_digest) {
  std::ostringstream os;
  os << "# tool_version: " << kToolVersion << "\n";
  os << "# config_digest: " << config_digest << "\n";
  os << "name,no_barrier,barrier,plateau,used,skipped,mean_accuracy,"
        "std_accuracy,delta_mean,delta_std,mean_distance,rise_tol,plateau_tol,"
        "plateau_span\n";
  for (const ComparisonRow& r : rows) {
    os << csv_quote(r.name) << ',' << r.no_barrier << ',' << r.barrier << ','
       << r.plateau << ',' << r.used << ',' << r.skipped << ','
       << format_double(r.mean_accuracy) << ',' << opt_cell(r.std_accuracy)
       << ',' << format_double(r.delta_mean) << ',' << opt_cell(r.delta_std)
       << ',' << format_double(r.mean_distance) << ','
       << format_double(r.tolerances.rise_tol) << ','
       << format_double(r.tolerances.plateau_tol) << ','
       << format_double(r.tolerances.plateau_span) << "\n";
  }
  return os.str();
}

std::string comparison_text(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  std::size_t name_w = 12;
  for (const ComparisonRow& r : rows) name_w = std::max(name_w, r.name.size());

  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %-11s %5s %5s  %-19s %-19s %9s\n",
                static_cast<int>(name_w), "intervention", "NB/B/P", "used",
                "skip", "test accuracy", "delta vs base", "distance");
  os << buf;
  for (const ComparisonRow& r : rows) {
    char shapes[32];
    std::snprintf(shapes, sizeof(shapes), "%d/%d/%d", r.no_barrier, r.barrier,
                  r.plateau);
    char acc[40];
    if (r.std_accuracy)
      std::snprintf(acc, sizeof(acc), "%.4f +- %.4f", r.mean_accuracy,
                    *r.std_accuracy);
    else
      std::snprintf(acc, sizeof(acc), "%.4f", r.mean_accuracy);
    char delta[40];
    if (r.delta_std)
      std::snprintf(delta, sizeof(delta), "%+.4f +- %.4f", r.delta_mean,
                    *r.delta_std);
    else
      std::snprintf(delta, sizeof(delta), "%+.4f", r.delta_mean);
    std::snprintf(buf, sizeof(buf), "%-*s  %-11s %5d %5d  %-19s %-19s %9.4f\n",
                  static_cast<int>(name_w), r.name.c_str(), shapes, r.used,
                  r.skipped, acc, delta, r.mean_distance);
    os << buf;
  }
  if (!rows.empty()) {
    const ShapeTolerances& t = rows.front().tolerances;
    char note[128];
    std::snprintf(note, sizeof(note),
                  "shape tolerances: rise=%g plateau=%g span=%g\n", t.rise_tol,
                  t.plateau_tol, t.plateau_span);
    os << note;
  }
  return os.str();
}

std::string svg_line_chart(const std::vector<PlotSeries>& series,
                           const std::string& title, const std::string& x_label,
                           const std::string& y_label) {
  if (series.empty())
    throw std::invalid_argument("svg chart: need at least one series");
  for (const PlotSeries& s : series)
    if (s.xs.size() != s.ys.size() || s.xs.empty())
      throw std::invalid_argument("svg chart: series '" + s.label +
                                  "' is empty or ragged");

  double x_min = series[0].xs[0], x_max = x_min;
  double y_min = series[0].ys[0], y_max = y_min;
  for (const PlotSeries& s : series) {
    for (double x : s.xs) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
    }
    for (double y : s.ys) {
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max == x_min) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max == y_min) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const double width = 860, height = 520;
  const double left = 70, right = width - 190, top = 40, bottom = height - 50;
  const auto px = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * (right - left);
  };
  const auto py = [&](double y) {
    return bottom - (y - y_min) / (y_max - y_min) * (bottom - top);
  };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  constexpr int kPaletteSize = 8;

  std::ostringstream os;
  char buf[512];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 860 520\" "
        "font-family=\"sans-serif\" font-size=\"13\">\n";
  os << "<rect width=\"860\" height=\"520\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.0f\" y=\"24\" text-anchor=\"middle\" "
                "font-size=\"16\">%s</text>\n",
                (left + right) / 2, xml_escape(title).c_str());
  os << buf;

  for (int i = 0; i <= 5; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 5.0;
    const double fy = y_min + (y_max - y_min) * i / 5.0;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"#dddddd\"/>\n",
                  px(fx), top, px(fx), bottom);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"#dddddd\"/>\n",
                  left, py(fy), right, py(fy));
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.4g"
                  "</text>\n",
                  px(fx), bottom + 18, fx);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g"
                  "</text>\n",
                  left - 6, py(fy) + 4, fy);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                left, bottom, right, bottom);
  os << buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                left, top, left, bottom);
  os << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n",
                (left + right) / 2, height - 12, xml_escape(x_label).c_str());
  os << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"18\" y=\"%.1f\" text-anchor=\"middle\" "
                "transform=\"rotate(-90 18 %.1f)\">%s</text>\n",
                (top + bottom) / 2, (top + bottom) / 2,
                xml_escape(y_label).c_str());
  os << buf;

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kPaletteSize];
    std::ostringstream pts;
    for (std::size_t i = 0; i < series[s].xs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(series[s].xs[i]),
                    py(series[s].ys[i]));
      pts << buf;
    }
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.8\" points=\"" << pts.str() << "\"/>\n";

    const double ly = top + 18 * static_cast<double>(s);
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"%s\" stroke-width=\"1.8\"/>\n",
                  right + 10, ly, right + 34, ly, color);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\">%s</text>\n", right + 40, ly + 4,
                  xml_escape(series[s].label).c_str());
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pathline
