#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "pathline/cli.hpp"
#include "pathline/config.hpp"
#include "pathline/report.hpp"

using namespace pathline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ModelSpec small_spec() {
  ModelSpec spec;
  spec.input_dim = 2;
  spec.hidden_widths = {8, 8};
  spec.output_dim = 1;
  return spec;
}

// Fresh empty directory under the system temp root.
fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pathline-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json tiny_config_json() {
  return json{
      {"model",
       {{"input_dim", 2},
        {"hidden", {8, 8}},
        {"output_dim", 1},
        {"activation", "relu"},
        {"loss", "bce"}}},
      {"dataset",
       {{"kind", "blobs"},
        {"n_train", 120},
        {"n_test", 60},
        {"separation", 6.0},
        {"sigma", 1.0},
        {"seed", 5}}},
      {"optimizer",
       {{"kind", "sgd_momentum"}, {"learning_rate", 0.05}, {"momentum", 0.9}}},
      {"training", {{"epochs", 6}, {"batch_size", 60}, {"eval_every", 3}}},
      {"protocol", {{"kind", "scratch"}}},
      {"seeds", {1, 2}},
      {"points", 9}};
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  write_file_atomic(p, j.dump(2) + "\n");
  return p;
}

RunRecord tiny_run(std::uint64_t seed) {
  const ModelSpec spec = small_spec();
  const Dataset data = blobs(120, 60, 6.0, 1.0, 5);
  OptimConfig oc;
  oc.kind = OptimKind::SgdMomentum;
  oc.base_lr = 0.05;
  TrainConfig tc;
  tc.epochs = 6;
  tc.batch_size = 60;
  tc.eval_every = 3;
  tc.shuffle_seed = seed;
  tc.checkpoint_epochs = {2};
  RunRecord rec = train(spec, init_params(spec, seed), data, oc, tc);
  rec.seed = seed;
  return rec;
}

}  // namespace

TEST_CASE("model spec json round-trips and rejects unknown keys") {
  const ModelSpec spec = small_spec();
  const json j = model_spec_to_json(spec);
  const ModelSpec back = model_spec_from_json(j);
  CHECK(back.hash() == spec.hash());

  json bad = j;
  bad["depth"] = 3;
  CHECK_THROWS_WITH_AS(model_spec_from_json(bad),
                       doctest::Contains("unknown key 'depth'"),
                       std::invalid_argument);
  json missing = j;
  missing.erase("hidden");
  CHECK_THROWS_WITH_AS(model_spec_from_json(missing),
                       doctest::Contains("hidden"), std::invalid_argument);
}

TEST_CASE("params json round-trips bitwise and validates layout") {
  const ModelSpec spec = small_spec();
  const ParamState params = init_params(spec, 42);
  const ParamState back = params_from_json(params_to_json(params), spec);
  CHECK(back.digest() == params.digest());
  CHECK(back.spec_hash == spec.hash());

  json j = params_to_json(params);
  j[0]["rows"] = 9;
  CHECK_THROWS_WITH_AS(params_from_json(j, spec),
                       doctest::Contains("does not match the model"),
                       std::invalid_argument);
  json swapped = params_to_json(params);
  std::swap(swapped[0], swapped[1]);
  CHECK_THROWS_AS(params_from_json(swapped, spec), std::invalid_argument);
  json truncated = params_to_json(params);
  truncated.erase(truncated.size() - 1);
  CHECK_THROWS_WITH_AS(params_from_json(truncated, spec),
                       doctest::Contains("entries"), std::invalid_argument);
}

TEST_CASE("checkpoint files round-trip byte for byte") {
  const fs::path dir = temp_dir("checkpoint");
  CheckpointFile ck;
  ck.config_digest = "0123456789abcdef";
  ck.epoch = 17;
  ck.model = small_spec();
  ck.params = init_params(ck.model, 7);

  const fs::path first = dir / "a.checkpoint.json";
  const fs::path second = dir / "b.checkpoint.json";
  save_checkpoint(first, ck);
  const CheckpointFile loaded = load_checkpoint(first);
  CHECK(loaded.format_version == kCheckpointFormatVersion);
  CHECK(loaded.tool_version == std::string(kToolVersion));
  CHECK(loaded.config_digest == ck.config_digest);
  CHECK(loaded.epoch == 17);
  CHECK(loaded.model.hash() == ck.model.hash());
  CHECK(loaded.params.digest() == ck.params.digest());
  save_checkpoint(second, loaded);
  CHECK(read_file(first) == read_file(second));

  // Unsupported versions and junk keys are refused outright.
  json j = json::parse(read_file(first));
  j["format_version"] = 99;
  write_file_atomic(dir / "v99.json", j.dump(2) + "\n");
  CHECK_THROWS_WITH_AS(load_checkpoint(dir / "v99.json"),
                       doctest::Contains("format version 99"),
                       std::invalid_argument);
  j["format_version"] = 1;
  j["note"] = "hi";
  write_file_atomic(dir / "junk.json", j.dump(2) + "\n");
  CHECK_THROWS_WITH_AS(load_checkpoint(dir / "junk.json"),
                       doctest::Contains("unknown key 'note'"),
                       std::invalid_argument);
}

TEST_CASE("run records persist losslessly and tampering is caught") {
  const fs::path dir = temp_dir("record");
  const RunRecord rec = tiny_run(3);
  const fs::path p = dir / "record.json";
  save_run_record(p, rec, "feedfacefeedface");

  const RunRecord back = load_run_record(p);
  CHECK(back.seed == rec.seed);
  CHECK(back.init_digest == rec.init_digest);
  CHECK(back.final_digest == rec.final_digest);
  CHECK(back.init_params.digest() == rec.init_params.digest());
  CHECK(back.final_params.digest() == rec.final_params.digest());
  CHECK(back.epochs.size() == rec.epochs.size());
  CHECK(back.epochs.back().train_loss == rec.epochs.back().train_loss);
  CHECK(back.evals.size() == rec.evals.size());
  CHECK(back.final_eval().test_accuracy == rec.final_eval().test_accuracy);
  CHECK(back.checkpoints.size() == 1);
  CHECK(back.checkpoints[0].params.digest() == rec.checkpoints[0].params.digest());
  CHECK_FALSE(back.failed);

  // Saving the loaded record reproduces the file byte for byte.
  save_run_record(dir / "again.json", back, "feedfacefeedface");
  CHECK(read_file(p) == read_file(dir / "again.json"));

  // A record whose parameters disagree with its stored digest is rejected.
  json j = json::parse(read_file(p));
  j["init_params"][0]["values"][0] = 123.25;
  write_file_atomic(dir / "tampered.json", j.dump(2) + "\n");
  CHECK_THROWS_WITH_AS(load_run_record(dir / "tampered.json"),
                       doctest::Contains("digests do not match"),
                       std::invalid_argument);

  const RecordDigestInfo info = peek_run_record(p);
  CHECK(info.config_digest == "feedfacefeedface");
  CHECK(info.seed == 3);
  CHECK_FALSE(info.failed);
  CHECK(info.final_eval.test_accuracy == rec.final_eval().test_accuracy);
}

TEST_CASE("path csv round-trips exactly") {
  const fs::path dir = temp_dir("pathcsv");
  const ModelSpec spec = small_spec();
  const Dataset data = blobs(120, 60, 6.0, 1.0, 5);
  const ParamState a = init_params(spec, 1);
  const ParamState b = init_params(spec, 2);
  const InterpPath path =
      evaluate_path(spec, a, b, LayerSelector::all(), data, Split::Test, 13);

  const fs::path p = dir / "path.csv";
  save_path_csv(p, path, "00000000deadbeef", 9);
  const LoadedPath lp = load_path_csv(p);
  CHECK(lp.path.alphas == path.alphas);
  CHECK(lp.path.losses == path.losses);
  CHECK(lp.path.accuracies == path.accuracies);
  CHECK(lp.path.varied == path.varied);
  CHECK(lp.path.eval_split == Split::Test);
  CHECK(lp.path.endpoint_init_digest == path.endpoint_init_digest);
  CHECK(lp.path.endpoint_final_digest == path.endpoint_final_digest);
  CHECK(lp.metadata.at("tool_version") == std::string(kToolVersion));
  CHECK(lp.metadata.at("config_digest") == "00000000deadbeef");
  CHECK(lp.metadata.at("seed") == "9");

  // Re-saving the loaded path reproduces the bytes.
  save_path_csv(dir / "again.csv", lp.path, "00000000deadbeef", 9);
  CHECK(read_file(p) == read_file(dir / "again.csv"));

  CHECK_THROWS_WITH_AS(load_path_csv(dir / "missing.csv"),
                       doctest::Contains("missing.csv"), std::runtime_error);
  write_file_atomic(dir / "bad.csv", "alpha,loss\n0,1\n");
  CHECK_THROWS_AS(load_path_csv(dir / "bad.csv"), std::invalid_argument);
}

TEST_CASE("shape json carries the classification and its tolerances") {
  std::vector<double> losses = {0.7, 0.9, 1.2, 0.6, 0.1};
  InterpPath p;
  const int k = static_cast<int>(losses.size());
  for (int i = 0; i < k; ++i) {
    p.alphas.push_back(static_cast<double>(i) / (k - 1));
    p.losses.push_back(losses[static_cast<std::size_t>(i)]);
    p.accuracies.push_back(0.5);
  }
  const PathShape shape = classify(p);
  const json j = shape_to_json(shape, "cafecafecafecafe", 4);
  CHECK(j.at("tag") == "barrier");
  CHECK(j.at("summit_index") == 2);
  CHECK(j.at("summit_alpha").get<double>() == doctest::Approx(0.5));
  CHECK(j.at("tolerances").at("rise").get<double>() == 0.05);
  CHECK(j.at("config_digest") == "cafecafecafecafe");
  CHECK(j.at("seed") == 4);
  CHECK(j.at("description").get<std::string>().find("barrier") !=
        std::string::npos);
}

TEST_CASE("comparison tables render csv and aligned text") {
  ComparisonRow base;
  base.name = "scratch";
  base.no_barrier = 1;
  base.barrier = 8;
  base.plateau = 1;
  base.used = 10;
  base.mean_accuracy = 0.92;
  base.std_accuracy = 0.01;
  base.mean_distance = 1.5;
  ComparisonRow other = base;
  other.name = "height_offset_0";
  other.used = 8;
  other.skipped = 2;
  other.delta_mean = 0.004;
  other.delta_std = std::nullopt;
  other.std_accuracy = std::nullopt;

  const std::string csv = comparison_csv({base, other}, "0011223344556677");
  CHECK(csv.find("# config_digest: 0011223344556677") != std::string::npos);
  CHECK(csv.find("name,no_barrier,barrier,plateau,used,skipped") !=
        std::string::npos);
  CHECK(csv.find("\"scratch\",1,8,1,10,0,0.92,0.01,0,,1.5") !=
        std::string::npos);
  // Empty cells stand in for the omitted std values.
  CHECK(csv.find("\"height_offset_0\",1,8,1,8,2,0.92,,0.004,,1.5") !=
        std::string::npos);

  const std::string text = comparison_text({base, other});
  CHECK(text.find("scratch") != std::string::npos);
  CHECK(text.find("1/8/1") != std::string::npos);
  CHECK(text.find("0.9200 +- 0.0100") != std::string::npos);
  CHECK(text.find("shape tolerances: rise=0.05") != std::string::npos);
}

TEST_CASE("svg chart is self-contained and escapes labels") {
  PlotSeries s1{"layers:0 <init>", {0.0, 0.5, 1.0}, {1.0, 2.0, 0.5}};
  PlotSeries s2{"b & c", {0.0, 1.0}, {0.3, 0.4}};
  const std::string svg = svg_line_chart({s1, s2}, "t", "alpha", "loss");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
  CHECK(svg.find("layers:0 &lt;init&gt;") != std::string::npos);
  CHECK(svg.find("b &amp; c") != std::string::npos);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 10);
  // one polyline per series
  std::size_t n = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
       pos = svg.find("<polyline", pos + 1))
    ++n;
  CHECK(n == 2);
  CHECK_THROWS_AS(svg_line_chart({}, "t", "x", "y"), std::invalid_argument);
  CHECK_THROWS_AS(svg_line_chart({PlotSeries{"e", {}, {}}}, "t", "x", "y"),
                  std::invalid_argument);
}

TEST_CASE("experiment configs parse, canonicalize, and reject junk") {
  const json j = tiny_config_json();
  const ExperimentConfig cfg = ExperimentConfig::from_json(j);
  CHECK(cfg.model.hidden_widths == std::vector<int>{8, 8});
  CHECK(cfg.dataset.kind == "blobs");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(cfg.points == 9);
  CHECK(cfg.eval_split == Split::Test);

  // Canonical form re-parses to the same digest.
  CHECK(ExperimentConfig::from_json(cfg.to_json()).digest() == cfg.digest());

  SUBCASE("defaults spelled out or omitted give the same digest") {
    json spelled = j;
    spelled["split"] = "test";
    spelled["tolerances"] = {{"rise", 0.05}, {"plateau", 0.05}, {"span", 0.6}};
    spelled["optimizer"]["weight_decay"] = 0.0;
    spelled["dataset"]["subset_fraction"] = 1.0;
    spelled["training"]["augment"] = "none";
    CHECK(ExperimentConfig::from_json(spelled).digest() == cfg.digest());
  }

  SUBCASE("output_dir does not change the digest") {
    json moved = j;
    moved["output_dir"] = "/somewhere/else";
    CHECK(ExperimentConfig::from_json(moved).digest() == cfg.digest());
  }

  SUBCASE("integer-spelled doubles canonicalize") {
    json spelled = j;
    spelled["dataset"]["sigma"] = 1;  // int spelling of 1.0
    CHECK(ExperimentConfig::from_json(spelled).digest() == cfg.digest());
  }

  SUBCASE("unknown keys are rejected at every level") {
    for (const auto& [where, key] :
         std::vector<std::pair<std::string, std::string>>{
             {"", "extra"},
             {"model", "depth"},
             {"dataset", "noise"},
             {"optimizer", "nesterov"},
             {"training", "patience"},
             {"protocol", "offset"},
             {"tolerances", "slack"}}) {
      json bad = j;
      if (where == "tolerances") bad["tolerances"] = {{"slack", 1}};
      else if (where.empty()) bad[key] = 1;
      else bad[where][key] = 1;
      CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(bad),
                           doctest::Contains("unknown key"),
                           std::invalid_argument);
    }
  }

  SUBCASE("kind-dependent keys") {
    json bad = j;
    bad["dataset"]["separation"] = 6.0;
    bad["dataset"]["kind"] = "spiral";  // separation belongs to blobs
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(bad),
                         doctest::Contains("separation"),
                         std::invalid_argument);
    json adam = j;
    adam["optimizer"] = {{"kind", "adam"}, {"momentum", 0.9}};
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(adam),
                         doctest::Contains("momentum"), std::invalid_argument);
  }

  SUBCASE("semantic validation") {
    json dup = j;
    dup["seeds"] = {1, 1};
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(dup),
                         doctest::Contains("distinct"), std::invalid_argument);
    json few = j;
    few["points"] = 2;
    CHECK_THROWS_AS(ExperimentConfig::from_json(few), std::invalid_argument);
    json csv = j;
    csv["dataset"] = {{"kind", "csv"}};
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(csv),
                         doctest::Contains("csv_path"), std::invalid_argument);
    json bigbatch = j;
    bigbatch["training"]["batch_size"] = 121;
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(bigbatch),
                         doctest::Contains("batch_size"),
                         std::invalid_argument);
  }

  SUBCASE("protocol-specific validation") {
    json height = j;
    height["protocol"] = {{"kind", "height_of_barrier"}, {"offset", 3}};
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(height),
                         doctest::Contains("offset"), std::invalid_argument);
    json transfer = j;
    transfer["protocol"] = {{"kind", "pretrain_transfer"}};
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(transfer),
                         doctest::Contains("source_dataset"),
                         std::invalid_argument);
    json sweep = j;
    sweep["protocol"] = {{"kind", "data_sweep"}, {"fractions", {0.5}}};
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(sweep),
                         doctest::Contains("augments"), std::invalid_argument);
    json pergroup = j;
    pergroup["protocol"] = {{"kind", "per_group_hyper"}, {"factor", 0.0}};
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(pergroup),
                         doctest::Contains("factor"), std::invalid_argument);
  }

  SUBCASE("protocol configs canonicalize through their json form") {
    for (const json jp : {json{{"kind", "scratch"}},
                          json{{"kind", "adversarial_init"},
                               {"phase_a_epoch_cap", 500},
                               {"memorization_threshold", 0.999}},
                          json{{"kind", "height_of_barrier"}, {"offset", -5}},
                          json{{"kind", "partial_reset"},
                               {"selector", "layers:0,2"},
                               {"source", "trained"}},
                          json{{"kind", "per_group_hyper"},
                               {"regime", "low_on_barrier"},
                               {"knob", "learning_rate"},
                               {"factor", 0.1}},
                          json{{"kind", "width_sweep"}},
                          json{{"kind", "data_sweep"},
                               {"fractions", {0.5, 1.0}},
                               {"augments", {"none", "jitter:0.1"}}}}) {
      const ProtocolConfig pc = ProtocolConfig::from_json(jp);
      const ProtocolConfig back = ProtocolConfig::from_json(pc.to_json());
      CHECK(back.to_json() == pc.to_json());
    }
  }
}

TEST_CASE("dataset configs build deterministically with transforms") {
  DatasetConfig dc;
  dc.kind = "blobs";
  dc.n_train = 100;
  dc.n_test = 40;
  dc.separation = 6.0;
  dc.sigma = 1.0;
  dc.seed = 11;
  dc.subset_fraction = 0.5;
  dc.corrupt_fraction = 0.25;
  const Dataset d1 = dc.build();
  const Dataset d2 = dc.build();
  CHECK(d1.digest() == d2.digest());
  CHECK(d1.n_train == 50);
  CHECK(d1.n_test == 40);

  // The transforms change the data but not the generator draws.
  DatasetConfig plain = dc;
  plain.subset_fraction = 1.0;
  plain.corrupt_fraction = 0.0;
  CHECK(plain.build().digest() != d1.digest());
  CHECK(plain.planned_train_rows() == 100);
  CHECK(dc.planned_train_rows() == 50);
}

TEST_CASE("tolerance flag parser") {
  const ShapeTolerances t = parse_tolerance_flag("rise=0.1,plateau=0.02");
  CHECK(t.rise_tol == 0.1);
  CHECK(t.plateau_tol == 0.02);
  CHECK(t.plateau_span == 0.6);  // untouched default
  CHECK(parse_tolerance_flag("span=0.5").plateau_span == 0.5);
  CHECK_THROWS_WITH_AS(parse_tolerance_flag("slack=1"),
                       doctest::Contains("unknown part"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_tolerance_flag("rise"), std::invalid_argument);
  CHECK_THROWS_AS(parse_tolerance_flag("rise=abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_tolerance_flag("rise=0"), std::invalid_argument);
}

TEST_CASE("output root resolution order") {
  ExperimentConfig cfg = ExperimentConfig::from_json(tiny_config_json());
  CliOverrides ov;

  unsetenv("PATHLINE_OUT");
  CHECK(resolve_output_dir(cfg, ov) == fs::path("runs"));
  setenv("PATHLINE_OUT", "/env/root", 1);
  CHECK(resolve_output_dir(cfg, ov) == fs::path("/env/root"));
  cfg.output_dir = "/cfg/root";
  CHECK(resolve_output_dir(cfg, ov) == fs::path("/cfg/root"));
  ov.out = "/flag/root";
  CHECK(resolve_output_dir(cfg, ov) == fs::path("/flag/root"));
  unsetenv("PATHLINE_OUT");
}

TEST_CASE("cmd_train writes records and reruns byte-identically") {
  const fs::path dir = temp_dir("cmdtrain");
  const fs::path cfg = write_config(dir, tiny_config_json());
  std::ostringstream out, err;
  CliOverrides ov;
  ov.out = (dir / "run1").string();
  CHECK(cmd_train(cfg, ov, out, err) == 0);
  CHECK(err.str().empty());
  CHECK(fs::exists(dir / "run1" / "seed-1" / "record.json"));
  CHECK(fs::exists(dir / "run1" / "seed-1" / "init.checkpoint.json"));
  CHECK(fs::exists(dir / "run1" / "seed-1" / "final.checkpoint.json"));
  CHECK(fs::exists(dir / "run1" / "seed-2" / "record.json"));
  CHECK(fs::exists(dir / "run1" / "config.json"));

  CliOverrides ov2;
  ov2.out = (dir / "run2").string();
  CHECK(cmd_train(cfg, ov2, out, err) == 0);
  CHECK(read_file(dir / "run1" / "seed-1" / "record.json") ==
        read_file(dir / "run2" / "seed-1" / "record.json"));
  CHECK(read_file(dir / "run1" / "seed-2" / "final.checkpoint.json") ==
        read_file(dir / "run2" / "seed-2" / "final.checkpoint.json"));

  // --seed narrows the sweep to one directory.
  CliOverrides ov3;
  ov3.out = (dir / "run3").string();
  ov3.seed = 1;
  CHECK(cmd_train(cfg, ov3, out, err) == 0);
  CHECK(fs::exists(dir / "run3" / "seed-1"));
  CHECK_FALSE(fs::exists(dir / "run3" / "seed-2"));
  CHECK(read_file(dir / "run3" / "seed-1" / "init.checkpoint.json") !=
        read_file(dir / "run1" / "seed-1" / "init.checkpoint.json"));
  // same training, different seed list -> different config digest in files
  CHECK(peek_run_record(dir / "run3" / "seed-1" / "record.json").config_digest !=
        peek_run_record(dir / "run1" / "seed-1" / "record.json").config_digest);
}

TEST_CASE("cmd_train names the offending field on a malformed config") {
  const fs::path dir = temp_dir("cmdtrainbad");
  json bad = tiny_config_json();
  bad["optimizer"]["warmup"] = 10;
  const fs::path cfg = write_config(dir, bad);
  std::ostringstream out, err;
  CliOverrides ov;
  ov.out = (dir / "out").string();
  CHECK(cmd_train(cfg, ov, out, err) == 1);
  CHECK(err.str().find("warmup") != std::string::npos);

  write_file_atomic(dir / "nonjson.json", "{not json");
  CHECK(cmd_train(dir / "nonjson.json", ov, out, err) == 1);
}

TEST_CASE("cmd_interp links two checkpoints over the configured data") {
  const fs::path dir = temp_dir("cmdinterp");
  json cj = tiny_config_json();
  cj.erase("points");  // default grid
  const fs::path cfg = write_config(dir, cj);
  std::ostringstream out, err;
  CliOverrides train_ov;
  train_ov.out = (dir / "train").string();
  train_ov.seed = 1;
  REQUIRE(cmd_train(cfg, train_ov, out, err) == 0);
  const fs::path init_ck = dir / "train" / "seed-1" / "init.checkpoint.json";
  const fs::path final_ck = dir / "train" / "seed-1" / "final.checkpoint.json";

  SUBCASE("default grid emits 51 rows") {
    CliOverrides ov;
    ov.out = (dir / "interp").string();
    CHECK(cmd_interp(cfg, init_ck, final_ck, "all", ov, out, err) == 0);
    const LoadedPath lp = load_path_csv(dir / "interp" / "path.csv");
    CHECK(lp.path.points() == 51);
    CHECK(fs::exists(dir / "interp" / "path.shape.json"));
  }

  SUBCASE("identical endpoints give a constant no-barrier path") {
    CliOverrides ov;
    ov.out = (dir / "self").string();
    ov.points = 9;
    CHECK(cmd_interp(cfg, init_ck, init_ck, "all", ov, out, err) == 0);
    const LoadedPath lp = load_path_csv(dir / "self" / "path.csv");
    for (double l : lp.path.losses)
      CHECK(l == doctest::Approx(lp.path.losses[0]).epsilon(1e-12));
    const json shape = json::parse(read_file(dir / "self" / "path.shape.json"));
    CHECK(shape.at("tag") == "no_barrier");
  }

  SUBCASE("incompatible checkpoints are refused") {
    CheckpointFile other;
    other.model = small_spec();
    other.model.hidden_widths = {4};
    other.params = init_params(other.model, 1);
    save_checkpoint(dir / "other.json", other);
    CliOverrides ov;
    ov.out = (dir / "bad").string();
    std::ostringstream err2;
    CHECK(cmd_interp(cfg, init_ck, dir / "other.json", "all", ov, out, err2) ==
          1);
    CHECK(err2.str().find("incompatible") != std::string::npos);
  }

  SUBCASE("layer selectors and split/tolerance overrides apply") {
    CliOverrides ov;
    ov.out = (dir / "layer").string();
    ov.points = 7;
    ov.split = Split::Train;
    CHECK(cmd_interp(cfg, init_ck, final_ck, "layers:0", ov, out, err) == 0);
    const LoadedPath lp = load_path_csv(dir / "layer" / "path.csv");
    CHECK(lp.path.varied == LayerSelector::of_layers({0}));
    CHECK(lp.metadata.at("split") == "train");
  }
}

TEST_CASE("cmd_protocol writes the bundle and the comparison table") {
  const fs::path dir = temp_dir("cmdprotocol");
  const fs::path cfg = write_config(dir, tiny_config_json());
  std::ostringstream out, err;
  CliOverrides ov;
  ov.out = (dir / "out").string();
  CHECK(cmd_protocol(cfg, ov, out, err) == 0);
  CHECK(err.str().empty());
  CHECK(fs::exists(dir / "out" / "comparison.csv"));
  CHECK(fs::exists(dir / "out" / "comparison.txt"));
  CHECK(fs::exists(dir / "out" / "scratch" / "seed-1" / "path-full.csv"));
  CHECK(fs::exists(dir / "out" / "scratch" / "seed-2" / "path-layer-2.csv"));
  const std::string csv = read_file(dir / "out" / "comparison.csv");
  // header comments + column header + exactly one row
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.find("\"scratch\",") != std::string::npos);
  CHECK(out.str().find("scratch") != std::string::npos);

  SUBCASE("reruns are byte-identical") {
    CliOverrides ov2;
    ov2.out = (dir / "out2").string();
    CHECK(cmd_protocol(cfg, ov2, out, err) == 0);
    CHECK(read_file(dir / "out" / "comparison.csv") ==
          read_file(dir / "out2" / "comparison.csv"));
    CHECK(read_file(dir / "out" / "scratch" / "seed-1" / "record.json") ==
          read_file(dir / "out2" / "scratch" / "seed-1" / "record.json"));
    CHECK(read_file(dir / "out" / "scratch" / "seed-1" / "path-full.csv") ==
          read_file(dir / "out2" / "scratch" / "seed-1" / "path-full.csv"));
  }

  SUBCASE("empty seed list succeeds with an empty table") {
    json empty = tiny_config_json();
    empty["seeds"] = json::array();
    const fs::path cfg2 = write_config(temp_dir("cmdprotocolempty"), empty);
    std::ostringstream out2, err2;
    CliOverrides ov2;
    ov2.out = (dir / "empty").string();
    CHECK(cmd_protocol(cfg2, ov2, out2, err2) == 0);
    const std::string table = read_file(dir / "empty" / "comparison.csv");
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);  // headers only
  }

  SUBCASE("unknown protocol kind is a config error") {
    json bad = tiny_config_json();
    bad["protocol"]["kind"] = "mystery";
    const fs::path cfg2 = write_config(temp_dir("cmdprotocolbad"), bad);
    std::ostringstream out2, err2;
    CliOverrides ov2;
    CHECK(cmd_protocol(cfg2, ov2, out2, err2) == 1);
    CHECK(err2.str().find("mystery") != std::string::npos);
  }
}

TEST_CASE("cmd_plot renders saved paths") {
  const fs::path dir = temp_dir("cmdplot");
  const fs::path cfg = write_config(dir, tiny_config_json());
  std::ostringstream out, err;
  CliOverrides ov;
  ov.out = (dir / "out").string();
  REQUIRE(cmd_protocol(cfg, ov, out, err) == 0);
  const fs::path csv1 = dir / "out" / "scratch" / "seed-1" / "path-full.csv";
  const fs::path csv2 = dir / "out" / "scratch" / "seed-2" / "path-full.csv";

  SUBCASE("no inputs is an error") {
    std::ostringstream err2;
    CHECK(cmd_plot({}, dir / "x.svg", out, err2) == 1);
    CHECK_FALSE(err2.str().empty());
  }

  SUBCASE("one csv, one series with metadata legend") {
    std::ostringstream out2, err2;
    CHECK(cmd_plot({csv1}, dir / "one.svg", out2, err2) == 0);
    CHECK(err2.str().empty());
    const std::string svg = read_file(dir / "one.svg");
    std::size_t n = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1))
      ++n;
    CHECK(n == 1);
    CHECK(svg.find("all seed 1") != std::string::npos);
  }

  SUBCASE("mismatched grids warn but still plot") {
    std::ostringstream interp_out, interp_err;
    CliOverrides iov;
    iov.out = (dir / "wide").string();
    iov.points = 21;
    std::ostringstream tout, terr;
    CliOverrides tov;
    tov.out = (dir / "train").string();
    tov.seed = 1;
    REQUIRE(cmd_train(cfg, tov, tout, terr) == 0);
    REQUIRE(cmd_interp(cfg, dir / "train" / "seed-1" / "init.checkpoint.json",
                       dir / "train" / "seed-1" / "final.checkpoint.json",
                       "all", iov, interp_out, interp_err) == 0);
    std::ostringstream out2, err2;
    CHECK(cmd_plot({csv1, dir / "wide" / "path.csv"}, dir / "mixed.svg", out2,
                   err2) == 0);
    CHECK(err2.str().find("grids differ") != std::string::npos);
    CHECK(fs::exists(dir / "mixed.svg"));
  }

  SUBCASE("two matching csvs plot quietly") {
    std::ostringstream out2, err2;
    CHECK(cmd_plot({csv1, csv2}, dir / "two.svg", out2, err2) == 0);
    CHECK(err2.str().empty());
  }
}

TEST_CASE("cmd_report aggregates records by config digest") {
  const fs::path dir = temp_dir("cmdreport");
  const fs::path cfg = write_config(dir, tiny_config_json());
  std::ostringstream out, err;
  CliOverrides ov;
  ov.out = (dir / "sweep").string();
  REQUIRE(cmd_train(cfg, ov, out, err) == 0);
  CliOverrides single;
  single.out = (dir / "single").string();
  single.seed = 9;
  REQUIRE(cmd_train(cfg, single, out, err) == 0);

  std::ostringstream rout, rerr;
  CHECK(cmd_report({dir}, (dir / "report.txt").string(), rout, rerr) == 0);
  const std::string text = rout.str();
  // two digests: the 2-seed sweep and the single-seed override
  CHECK(text.find("2 records") != std::string::npos);
  CHECK(text.find("1 record\n") != std::string::npos);
  CHECK(text.find("std omitted: single seed") != std::string::npos);
  CHECK(text.find("test accuracy") != std::string::npos);
  CHECK(read_file(dir / "report.txt").find("2 records") != std::string::npos);

  SUBCASE("empty scan fails, missing dirs warn") {
    std::ostringstream rout2, rerr2;
    CHECK(cmd_report({dir / "nothing-here"}, "", rout2, rerr2) == 1);
    CHECK_FALSE(rerr2.str().empty());
  }
  SUBCASE("no directories is an error") {
    std::ostringstream rout2, rerr2;
    CHECK(cmd_report({}, "", rout2, rerr2) == 1);
  }
}

TEST_CASE("shipped example configs parse, validate, and digest") {
#ifdef PATHLINE_SOURCE_DIR
  const fs::path dir = fs::path(PATHLINE_SOURCE_DIR) / "configs";
  REQUIRE(fs::is_directory(dir));
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().filename().string());
    const ExperimentConfig cfg = ExperimentConfig::load(entry.path());
    CHECK(cfg.digest().size() == 16);
    ++seen;
  }
  CHECK(seen >= 8);  // at least one example per protocol kind
#endif
}
