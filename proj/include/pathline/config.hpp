#pragma once

// Declarative experiment configuration: a single JSON document that fully
// determines one protocol invocation. Parsing rejects unknown keys at every
// level, validation runs before any compute, and the canonical re-serialized
// form (defaults resolved, keys sorted) is digested so every output file can
// name the exact configuration that produced it.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathline/protocols.hpp"

namespace pathline {

// Where the dataset comes from. Generated kinds ("spiral", "blobs") carry
// their generator arguments; "csv" points at a previously exported file.
// Subsetting keeps a stratified fraction of the train split, corruption then
// shuffles a fraction of the remaining train labels; both transform streams
// derive from `seed` so the generator draws are untouched.
struct DatasetConfig {
  std::string kind = "spiral";  // spiral | blobs | csv
  std::size_t n_train = 10000;
  std::size_t n_test = 5000;
  double sigma = 0.02;      // coordinate noise (spiral) / cluster sigma (blobs)
  double separation = 6.0;  // blobs: distance between the two means
  std::uint64_t seed = 0;
  double subset_fraction = 1.0;
  double corrupt_fraction = 0.0;
  std::string csv_path;  // csv only

  void validate() const;
  Dataset build() const;
  // Train rows after the subset step (csv defers to the file's own count).
  std::optional<std::size_t> planned_train_rows() const;
  nlohmann::json to_json() const;
  static DatasetConfig from_json(const nlohmann::json& j);
};

// Arguments of the selected protocol kind. Only the keys belonging to the
// kind are accepted, and the canonical form spells all of them out.
struct ProtocolConfig {
  ProtocolKind kind = ProtocolKind::Scratch;

  AdversarialConfig adversarial;  // adversarial_init

  int offset = 0;  // height_of_barrier: -5 | 0 | +5 grid points

  LayerSelector reset_selector;  // partial_reset
  ResetSource reset_source = ResetSource::Trained;

  // pretrain_transfer, and partial_reset with a pretrained source
  std::optional<DatasetConfig> source_dataset;

  HyperRegime regime = HyperRegime::Base;  // per_group_hyper
  HyperKnob knob = HyperKnob::LearningRate;
  double factor = 0.1;

  std::vector<double> fractions;     // data_sweep
  std::vector<AugmentSpec> augments;

  void validate() const;
  nlohmann::json to_json() const;
  static ProtocolConfig from_json(const nlohmann::json& j);
};

struct ExperimentConfig {
  ModelSpec model;
  DatasetConfig dataset;
  OptimConfig optimizer;
  TrainConfig training;  // shuffle_seed is assigned per run, never configured
  ProtocolConfig protocol;
  std::vector<std::uint64_t> seeds;
  ShapeTolerances tolerances;
  int points = 51;
  Split eval_split = Split::Test;
  std::string output_dir;  // optional; the CLI documents its override order

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Digest of the canonical serialized form, as 16 hex characters. Identical
  // digests identify identical effective configurations regardless of which
  // defaults the file spelled out; output_dir is excluded, so moving the
  // results does not change the experiment's identity.
  std::string digest() const;

  // Materializes the shared protocol inputs (builds the dataset).
  ProtocolBase build_base() const;
};

// Sub-object converters, shared with tests and the CLI.
nlohmann::json optim_config_to_json(const OptimConfig& oc);
OptimConfig optim_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& tc);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json tolerances_to_json(const ShapeTolerances& t);
ShapeTolerances tolerances_from_json(const nlohmann::json& j);

}  // namespace pathline
