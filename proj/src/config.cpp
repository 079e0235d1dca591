#include "pathline/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "pathline/report.hpp"

namespace pathline {

namespace {

using nlohmann::json;

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

}  // namespace

// --- DatasetConfig ---------------------------------------------------------

void DatasetConfig::validate() const {
  if (kind != "spiral" && kind != "blobs" && kind != "csv")
    throw std::invalid_argument("dataset: unknown kind '" + kind + "'");
  if (kind == "csv") {
    if (csv_path.empty())
      throw std::invalid_argument("dataset: csv kind needs csv_path");
  } else {
    if (n_train == 0 || n_test == 0)
      throw std::invalid_argument("dataset: n_train and n_test must be positive");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
      throw std::invalid_argument("dataset: sigma must be finite and >= 0");
    if (kind == "blobs" && (!(separation > 0.0) || !std::isfinite(separation)))
      throw std::invalid_argument("dataset: separation must be finite and > 0");
  }
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0))
    throw std::invalid_argument("dataset: subset_fraction must lie in (0, 1]");
  if (!(corrupt_fraction >= 0.0 && corrupt_fraction <= 1.0))
    throw std::invalid_argument("dataset: corrupt_fraction must lie in [0, 1]");
}

Dataset DatasetConfig::build() const {
  validate();
  Dataset d;
  if (kind == "spiral")
    d = spiral(n_train, n_test, sigma, seed);
  else if (kind == "blobs")
    d = blobs(n_train, n_test, separation, sigma, seed);
  else
    d = import_csv(csv_path);
  if (subset_fraction < 1.0)
    d = subset(d, subset_fraction, derive_seed(seed, "dataset-subset"));
  if (corrupt_fraction > 0.0)
    d = corrupt_labels(d, corrupt_fraction, derive_seed(seed, "dataset-corrupt"));
  return d;
}

std::optional<std::size_t> DatasetConfig::planned_train_rows() const {
  if (kind == "csv") return std::nullopt;
  return static_cast<std::size_t>(
      std::ceil(subset_fraction * static_cast<double>(n_train)));
}

json DatasetConfig::to_json() const {
  json j{{"kind", kind},
         {"seed", seed},
         {"subset_fraction", subset_fraction},
         {"corrupt_fraction", corrupt_fraction}};
  if (kind == "csv") {
    j["csv_path"] = csv_path;
  } else {
    j["n_train"] = n_train;
    j["n_test"] = n_test;
    j["sigma"] = sigma;
    if (kind == "blobs") j["separation"] = separation;
  }
  return j;
}

DatasetConfig DatasetConfig::from_json(const json& j) {
  DatasetConfig dc;
  if (!j.is_object())
    throw std::invalid_argument("dataset: expected an object");
  if (!j.contains("kind"))
    throw std::invalid_argument("dataset: missing key 'kind'");
  dc.kind = j.at("kind").get<std::string>();

  std::vector<std::string> allowed = {"kind", "seed", "subset_fraction",
                                      "corrupt_fraction"};
  if (dc.kind == "csv") {
    allowed.push_back("csv_path");
  } else {
    allowed.insert(allowed.end(), {"n_train", "n_test", "sigma"});
    if (dc.kind == "blobs") allowed.push_back("separation");
  }
  check_keys(j, allowed, "dataset(" + dc.kind + ")");

  dc.seed = j.value("seed", dc.seed);
  dc.subset_fraction = j.value("subset_fraction", dc.subset_fraction);
  dc.corrupt_fraction = j.value("corrupt_fraction", dc.corrupt_fraction);
  if (dc.kind == "csv") {
    dc.csv_path = j.value("csv_path", dc.csv_path);
  } else {
    dc.n_train = j.value("n_train", dc.n_train);
    dc.n_test = j.value("n_test", dc.n_test);
    dc.sigma = j.value("sigma", dc.sigma);
    if (dc.kind == "blobs") dc.separation = j.value("separation", dc.separation);
  }
  dc.validate();
  return dc;
}

// --- Optimizer / training / tolerances sub-objects -------------------------

json optim_config_to_json(const OptimConfig& oc) {
  json j{{"kind", to_string(oc.kind)},
         {"learning_rate", oc.base_lr},
         {"weight_decay", oc.weight_decay}};
  if (oc.kind == OptimKind::SgdMomentum) {
    j["momentum"] = oc.momentum;
  } else {
    j["beta1"] = oc.beta1;
    j["beta2"] = oc.beta2;
    j["epsilon"] = oc.epsilon;
  }
  json schedule = json::array();
  for (const ScheduleEntry& s : oc.schedule)
    schedule.push_back(json{{"epoch", s.epoch}, {"multiplier", s.multiplier}});
  j["schedule"] = schedule;
  json groups = json::array();
  for (const GroupOverride& g : oc.group_overrides) {
    json jg{{"selector", g.selector.to_string()}};
    if (g.lr) jg["learning_rate"] = *g.lr;
    if (g.weight_decay) jg["weight_decay"] = *g.weight_decay;
    groups.push_back(jg);
  }
  j["groups"] = groups;
  return j;
}

OptimConfig optim_config_from_json(const json& j) {
  if (!j.is_object())
    throw std::invalid_argument("optimizer: expected an object");
  if (!j.contains("kind"))
    throw std::invalid_argument("optimizer: missing key 'kind'");
  OptimConfig oc;
  oc.kind = optim_kind_from_string(j.at("kind").get<std::string>());

  std::vector<std::string> allowed = {"kind", "learning_rate", "weight_decay",
                                      "schedule", "groups"};
  if (oc.kind == OptimKind::SgdMomentum)
    allowed.push_back("momentum");
  else
    allowed.insert(allowed.end(), {"beta1", "beta2", "epsilon"});
  check_keys(j, allowed, "optimizer(" + to_string(oc.kind) + ")");

  oc.base_lr = j.value("learning_rate", oc.base_lr);
  oc.weight_decay = j.value("weight_decay", oc.weight_decay);
  if (oc.kind == OptimKind::SgdMomentum) {
    oc.momentum = j.value("momentum", oc.momentum);
  } else {
    oc.beta1 = j.value("beta1", oc.beta1);
    oc.beta2 = j.value("beta2", oc.beta2);
    oc.epsilon = j.value("epsilon", oc.epsilon);
  }
  if (j.contains("schedule")) {
    for (const json& js : j.at("schedule")) {
      check_keys(js, {"epoch", "multiplier"}, "optimizer schedule");
      oc.schedule.push_back({js.at("epoch").get<int>(),
                             js.at("multiplier").get<double>()});
    }
  }
  if (j.contains("groups")) {
    for (const json& jg : j.at("groups")) {
      check_keys(jg, {"selector", "learning_rate", "weight_decay"},
                 "optimizer group");
      GroupOverride g;
      g.selector = LayerSelector::parse(jg.at("selector").get<std::string>());
      if (jg.contains("learning_rate"))
        g.lr = jg.at("learning_rate").get<double>();
      if (jg.contains("weight_decay"))
        g.weight_decay = jg.at("weight_decay").get<double>();
      oc.group_overrides.push_back(std::move(g));
    }
  }
  return oc;
}

json train_config_to_json(const TrainConfig& tc) {
  json j{{"epochs", tc.epochs},
         {"batch_size", tc.batch_size},
         {"eval_every", tc.eval_every},
         {"checkpoint_epochs", tc.checkpoint_epochs},
         {"augment", tc.augment.to_string()}};
  if (tc.stop_train_accuracy) j["stop_train_accuracy"] = *tc.stop_train_accuracy;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  check_keys(j,
             {"epochs", "batch_size", "eval_every", "checkpoint_epochs",
              "augment", "stop_train_accuracy"},
             "training");
  TrainConfig tc;
  tc.epochs = j.value("epochs", tc.epochs);
  tc.batch_size = j.value("batch_size", tc.batch_size);
  tc.eval_every = j.value("eval_every", tc.eval_every);
  if (j.contains("checkpoint_epochs"))
    tc.checkpoint_epochs = j.at("checkpoint_epochs").get<std::vector<int>>();
  if (j.contains("augment"))
    tc.augment = AugmentSpec::parse(j.at("augment").get<std::string>());
  if (j.contains("stop_train_accuracy"))
    tc.stop_train_accuracy = j.at("stop_train_accuracy").get<double>();
  return tc;
}

json tolerances_to_json(const ShapeTolerances& t) {
  return json{{"rise", t.rise_tol},
              {"plateau", t.plateau_tol},
              {"span", t.plateau_span}};
}

ShapeTolerances tolerances_from_json(const json& j) {
  check_keys(j, {"rise", "plateau", "span"}, "tolerances");
  ShapeTolerances t;
  t.rise_tol = j.value("rise", t.rise_tol);
  t.plateau_tol = j.value("plateau", t.plateau_tol);
  t.plateau_span = j.value("span", t.plateau_span);
  t.validate();
  return t;
}

// --- ProtocolConfig --------------------------------------------------------

void ProtocolConfig::validate() const {
  switch (kind) {
    case ProtocolKind::Scratch:
    case ProtocolKind::WidthSweep:
      break;
    case ProtocolKind::AdversarialInit:
      if (adversarial.phase_a_epoch_cap < 0)
        throw std::invalid_argument(
            "protocol: phase_a_epoch_cap must be >= 0 (0 uses the training "
            "epoch count)");
      if (!(adversarial.memorization_threshold > 0.0 &&
            adversarial.memorization_threshold <= 1.0))
        throw std::invalid_argument(
            "protocol: memorization_threshold must lie in (0, 1]");
      break;
    case ProtocolKind::HeightOfBarrierInit:
      if (offset != -5 && offset != 0 && offset != 5)
        throw std::invalid_argument(
            "protocol: offset must be -5, 0, or 5 grid points");
      break;
    case ProtocolKind::PartialReset:
      if (reset_source == ResetSource::Pretrained && !source_dataset)
        throw std::invalid_argument(
            "protocol: partial_reset from a pretrained source needs "
            "source_dataset");
      if (source_dataset) source_dataset->validate();
      break;
    case ProtocolKind::PretrainTransfer:
      if (!source_dataset)
        throw std::invalid_argument(
            "protocol: pretrain_transfer needs source_dataset");
      source_dataset->validate();
      break;
    case ProtocolKind::PerGroupHyper:
      if (!(factor > 0.0) || !std::isfinite(factor))
        throw std::invalid_argument("protocol: factor must be finite and > 0");
      break;
    case ProtocolKind::DataSweep:
      if (fractions.empty())
        throw std::invalid_argument("protocol: data_sweep needs fractions");
      if (augments.empty())
        throw std::invalid_argument("protocol: data_sweep needs augments");
      for (double f : fractions)
        if (!(f > 0.0 && f <= 1.0))
          throw std::invalid_argument(
              "protocol: data_sweep fractions must lie in (0, 1]");
      for (const AugmentSpec& a : augments) a.validate();
      break;
  }
}

json ProtocolConfig::to_json() const {
  json j{{"kind", to_string(kind)}};
  switch (kind) {
    case ProtocolKind::Scratch:
    case ProtocolKind::WidthSweep:
      break;
    case ProtocolKind::AdversarialInit:
      j["phase_a_epoch_cap"] = adversarial.phase_a_epoch_cap;
      j["memorization_threshold"] = adversarial.memorization_threshold;
      break;
    case ProtocolKind::HeightOfBarrierInit:
      j["offset"] = offset;
      break;
    case ProtocolKind::PartialReset:
      j["selector"] = reset_selector.to_string();
      j["source"] = to_string(reset_source);
      if (reset_source == ResetSource::Pretrained)
        j["source_dataset"] = source_dataset->to_json();
      break;
    case ProtocolKind::PretrainTransfer:
      j["source_dataset"] = source_dataset->to_json();
      break;
    case ProtocolKind::PerGroupHyper:
      j["regime"] = to_string(regime);
      j["knob"] = to_string(knob);
      j["factor"] = factor;
      break;
    case ProtocolKind::DataSweep: {
      j["fractions"] = fractions;
      json ja = json::array();
      for (const AugmentSpec& a : augments) ja.push_back(a.to_string());
      j["augments"] = ja;
      break;
    }
  }
  return j;
}

ProtocolConfig ProtocolConfig::from_json(const json& j) {
  if (!j.is_object())
    throw std::invalid_argument("protocol: expected an object");
  if (!j.contains("kind"))
    throw std::invalid_argument("protocol: missing key 'kind'");
  ProtocolConfig pc;
  pc.kind = protocol_kind_from_string(j.at("kind").get<std::string>());

  std::vector<std::string> allowed = {"kind"};
  switch (pc.kind) {
    case ProtocolKind::Scratch:
    case ProtocolKind::WidthSweep:
      break;
    case ProtocolKind::AdversarialInit:
      allowed.insert(allowed.end(),
                     {"phase_a_epoch_cap", "memorization_threshold"});
      break;
    case ProtocolKind::HeightOfBarrierInit:
      allowed.push_back("offset");
      break;
    case ProtocolKind::PartialReset:
      allowed.insert(allowed.end(), {"selector", "source", "source_dataset"});
      break;
    case ProtocolKind::PretrainTransfer:
      allowed.push_back("source_dataset");
      break;
    case ProtocolKind::PerGroupHyper:
      allowed.insert(allowed.end(), {"regime", "knob", "factor"});
      break;
    case ProtocolKind::DataSweep:
      allowed.insert(allowed.end(), {"fractions", "augments"});
      break;
  }
  check_keys(j, allowed, "protocol(" + to_string(pc.kind) + ")");

  switch (pc.kind) {
    case ProtocolKind::Scratch:
    case ProtocolKind::WidthSweep:
      break;
    case ProtocolKind::AdversarialInit:
      pc.adversarial.phase_a_epoch_cap =
          j.value("phase_a_epoch_cap", pc.adversarial.phase_a_epoch_cap);
      pc.adversarial.memorization_threshold = j.value(
          "memorization_threshold", pc.adversarial.memorization_threshold);
      break;
    case ProtocolKind::HeightOfBarrierInit:
      pc.offset = j.value("offset", pc.offset);
      break;
    case ProtocolKind::PartialReset:
      if (j.contains("selector"))
        pc.reset_selector =
            LayerSelector::parse(j.at("selector").get<std::string>());
      if (j.contains("source"))
        pc.reset_source =
            reset_source_from_string(j.at("source").get<std::string>());
      if (j.contains("source_dataset"))
        pc.source_dataset = DatasetConfig::from_json(j.at("source_dataset"));
      break;
    case ProtocolKind::PretrainTransfer:
      if (j.contains("source_dataset"))
        pc.source_dataset = DatasetConfig::from_json(j.at("source_dataset"));
      break;
    case ProtocolKind::PerGroupHyper:
      if (j.contains("regime"))
        pc.regime = hyper_regime_from_string(j.at("regime").get<std::string>());
      if (j.contains("knob"))
        pc.knob = hyper_knob_from_string(j.at("knob").get<std::string>());
      pc.factor = j.value("factor", pc.factor);
      break;
    case ProtocolKind::DataSweep:
      if (j.contains("fractions"))
        pc.fractions = j.at("fractions").get<std::vector<double>>();
      if (j.contains("augments"))
        for (const json& ja : j.at("augments"))
          pc.augments.push_back(AugmentSpec::parse(ja.get<std::string>()));
      break;
  }
  pc.validate();
  return pc;
}

// --- ExperimentConfig ------------------------------------------------------

void ExperimentConfig::validate() const {
  model.validate();
  dataset.validate();
  if (model.input_dim != 2 && dataset.kind != "csv")
    throw std::invalid_argument(
        "config: generated datasets are 2-dimensional but the model expects "
        "input_dim " +
        std::to_string(model.input_dim));
  optimizer.validate(model);
  // A csv dataset's row count is only known once the file is read; the batch
  // bound is re-checked when the protocol inputs are built.
  const auto planned = dataset.planned_train_rows();
  training.validate(planned ? *planned
                            : std::numeric_limits<std::size_t>::max());
  protocol.validate();
  tolerances.validate();
  if (points < 3)
    throw std::invalid_argument("config: points must be >= 3");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size())
    throw std::invalid_argument("config: seeds must be distinct");
  if (protocol.kind == ProtocolKind::PretrainTransfer &&
      protocol.source_dataset->kind != "csv" &&
      model.input_dim != 2)
    throw std::invalid_argument(
        "config: generated source datasets are 2-dimensional but the model "
        "expects input_dim " +
        std::to_string(model.input_dim));
}

json ExperimentConfig::to_json() const {
  return json{{"model", model_spec_to_json(model)},
              {"dataset", dataset.to_json()},
              {"optimizer", optim_config_to_json(optimizer)},
              {"training", train_config_to_json(training)},
              {"protocol", protocol.to_json()},
              {"seeds", seeds},
              {"tolerances", tolerances_to_json(tolerances)},
              {"points", points},
              {"split", to_string(eval_split)},
              {"output_dir", output_dir}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j,
             {"model", "dataset", "optimizer", "training", "protocol", "seeds",
              "tolerances", "points", "split", "output_dir"},
             "config");
  for (const char* key : {"model", "dataset", "optimizer", "training"})
    if (!j.contains(key))
      throw std::invalid_argument("config: missing key '" + std::string(key) +
                                  "'");
  ExperimentConfig cfg;
  cfg.model = model_spec_from_json(j.at("model"));
  cfg.dataset = DatasetConfig::from_json(j.at("dataset"));
  cfg.optimizer = optim_config_from_json(j.at("optimizer"));
  cfg.training = train_config_from_json(j.at("training"));
  if (j.contains("protocol"))
    cfg.protocol = ProtocolConfig::from_json(j.at("protocol"));
  if (j.contains("seeds"))
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("tolerances"))
    cfg.tolerances = tolerances_from_json(j.at("tolerances"));
  cfg.points = j.value("points", cfg.points);
  if (j.contains("split"))
    cfg.eval_split = split_from_string(j.at("split").get<std::string>());
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    // Comments are allowed so config files can carry annotations.
    j = json::parse(read_file(path), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() +
                                " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::string ExperimentConfig::digest() const {
  // Where results are written is not part of the experiment's identity, so
  // records produced by the same configuration group together no matter which
  // directory they landed in.
  json j = to_json();
  j.erase("output_dir");
  Fnv1a h;
  h.update(j.dump());
  return digest_hex(h.value());
}

ProtocolBase ExperimentConfig::build_base() const {
  validate();
  ProtocolBase base;
  base.model = model;
  base.data = dataset.build();
  base.optim = optimizer;
  base.training = training;
  base.tolerances = tolerances;
  base.path_points = points;
  base.eval_split = eval_split;
  base.validate();
  return base;
}

}  // namespace pathline
