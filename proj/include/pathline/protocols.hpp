#pragma once

// Experiment recipes: seed-swept procedures that train models, probe the
// interpolation paths of the results, and aggregate the outcomes into
// comparison tables. Every procedure is a pure function of its arguments, so
// re-running one reproduces its records bitwise.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pathline/interp.hpp"
#include "pathline/optim.hpp"

namespace pathline {

enum class ProtocolKind {
  Scratch,
  AdversarialInit,
  HeightOfBarrierInit,
  PartialReset,
  PretrainTransfer,
  PerGroupHyper,
  WidthSweep,
  DataSweep,
};

std::string to_string(ProtocolKind k);
ProtocolKind protocol_kind_from_string(const std::string& s);

// The shared ingredients of one protocol invocation. Seeds come separately so
// one base can be swept.
struct ProtocolBase {
  ModelSpec model;
  Dataset data;
  OptimConfig optim;
  TrainConfig training;
  ShapeTolerances tolerances;
  int path_points = 51;
  Split eval_split = Split::Test;

  void validate() const;
};

// A sampled path together with its classification.
struct PathReport {
  InterpPath path;
  PathShape shape;
};

// ---------------------------------------------------------------------------
// Scratch: the baseline every intervention is compared against.

struct ScratchOutcome {
  std::uint64_t seed = 0;
  RunRecord record;
  PathReport full;                  // full-model path init -> final
  std::vector<PathReport> layers;   // one path per layer, others pinned final
  double distance = 0.0;            // relative parameter movement
};

struct ScratchResult {
  std::vector<ScratchOutcome> outcomes;
};

ScratchResult run_scratch(const ProtocolBase& base,
                          const std::vector<std::uint64_t>& seeds);

// ---------------------------------------------------------------------------
// Adversarial initialization: memorize fully shuffled labels (phase A), then
// train on the real labels from that state (phase B).

struct AdversarialConfig {
  int phase_a_epoch_cap = 0;             // 0 -> use base.training.epochs
  double memorization_threshold = 0.999;  // required phase-A train accuracy
};

struct AdversarialOutcome {
  std::uint64_t seed = 0;
  RunRecord phase_a;
  RunRecord phase_b;
  PathReport full;      // phase-B path: memorizing state -> final
  double distance = 0.0;
};

struct AdversarialResult {
  std::vector<AdversarialOutcome> outcomes;
};

AdversarialResult run_adversarial_init(const ProtocolBase& base,
                                       const std::vector<std::uint64_t>& seeds,
                                       const AdversarialConfig& cfg = {});

// ---------------------------------------------------------------------------
// Height-of-barrier initialization: restart training from the summit of a
// barrier (or five grid points before/after it). Seeds whose baseline path
// shows no barrier are skipped and reported.

struct HeightOutcome {
  std::uint64_t seed = 0;
  int offset = 0;
  double start_alpha = 0.0;         // where on the baseline path we restarted
  RunRecord record;
  PathReport full;                  // restarted init -> new final
  double distance = 0.0;
  double threshold = 0.0;           // baseline's final running train loss
  int epochs_to_threshold = -1;     // epochs the restart needed; -1 = never
  int scratch_epochs_to_threshold = -1;
  double scratch_test_accuracy = 0.0;
};

struct HeightResult {
  int offset = 0;
  std::vector<HeightOutcome> outcomes;
  std::vector<std::uint64_t> skipped_seeds;  // baseline not Barrier
  ShapeTolerances tolerances;
};

HeightResult run_height_of_barrier(const ProtocolBase& base,
                                   const std::vector<std::uint64_t>& seeds,
                                   int offset);
// Reuse already-computed baselines (must cover the same base).
HeightResult run_height_of_barrier(const ProtocolBase& base,
                                   const ScratchResult& scratch, int offset);

// ---------------------------------------------------------------------------
// Pre-train on a related source task, then fine-tune on the target with the
// reduced learning-rate convention (1/100th of the base rate, one 10x drop
// halfway through).

struct PretrainOutcome {
  std::uint64_t seed = 0;
  RunRecord phase_a;    // source-task run
  RunRecord phase_b;    // fine-tuning run
  PathReport full;      // phase-B path: pre-trained state -> fine-tuned
  double distance = 0.0;
};

struct PretrainResult {
  std::vector<PretrainOutcome> outcomes;
};

PretrainResult run_pretrain_transfer(const ProtocolBase& base,
                                     const Dataset& source_task,
                                     const std::vector<std::uint64_t>& seeds);

// ---------------------------------------------------------------------------
// Partial reset: take a converged state, re-draw the selected layers at
// random, and retrain.

enum class ResetSource { Trained, Pretrained };

std::string to_string(ResetSource s);
ResetSource reset_source_from_string(const std::string& s);

struct PartialResetOutcome {
  std::uint64_t seed = 0;
  std::uint64_t source_digest = 0;  // digest of the state the reset started from
  RunRecord record;
  PathReport full;
  double distance = 0.0;
};

struct PartialResetResult {
  LayerSelector selector;
  ResetSource source = ResetSource::Trained;
  std::vector<PartialResetOutcome> outcomes;
};

// source == Pretrained needs the source task the donor state was trained on;
// the donor is that task's pre-training run (phase A of the transfer recipe).
PartialResetResult run_partial_reset(const ProtocolBase& base,
                                     const std::vector<std::uint64_t>& seeds,
                                     const LayerSelector& sel, ResetSource source,
                                     const Dataset* source_task = nullptr);
PartialResetResult run_partial_reset(const ProtocolBase& base,
                                     const ScratchResult& scratch,
                                     const LayerSelector& sel);

// ---------------------------------------------------------------------------
// Per-group hyperparameters: classify each layer's path on a baseline run,
// then retrain from the same initialization with reduced learning rate (or a
// different weight decay) on the chosen group of layers.

enum class HyperRegime { Base, LowOnNoBarrier, LowOnBarrier, LowAll };
enum class HyperKnob { LearningRate, WeightDecay };

std::string to_string(HyperRegime r);
HyperRegime hyper_regime_from_string(const std::string& s);
std::string to_string(HyperKnob k);
HyperKnob hyper_knob_from_string(const std::string& s);

struct PerGroupOutcome {
  std::uint64_t seed = 0;
  std::vector<ShapeTag> stage1_layer_tags;  // baseline per-layer shapes
  std::vector<int> override_layers;         // layers the regime touched
  RunRecord record;
  PathReport full;
  std::vector<PathReport> layers;
  double distance = 0.0;
};

struct PerGroupResult {
  HyperRegime regime = HyperRegime::Base;
  HyperKnob knob = HyperKnob::LearningRate;
  double factor = 0.1;
  std::vector<PerGroupOutcome> outcomes;
};

// knob = LearningRate: selected layers train at base_lr * factor.
// knob = WeightDecay: selected layers train with weight decay = factor.
PerGroupResult run_per_group_hyper(const ProtocolBase& base,
                                   const std::vector<std::uint64_t>& seeds,
                                   HyperRegime regime, HyperKnob knob,
                                   double factor = 0.1);
PerGroupResult run_per_group_hyper(const ProtocolBase& base,
                                   const ScratchResult& scratch,
                                   HyperRegime regime, HyperKnob knob,
                                   double factor = 0.1);

// ---------------------------------------------------------------------------
// Width sweep: three fixed six-hidden-layer plans on the base task.

struct WidthPlan {
  std::string name;
  std::vector<int> hidden_widths;
};

// all-50, all-500, and the mixed plan (500 for the first four hidden layers,
// 25 for the last two).
std::vector<WidthPlan> width_sweep_plans();

struct WidthSweepResult {
  std::vector<WidthPlan> plans;
  std::vector<ScratchResult> per_plan;  // aligned with plans
};

WidthSweepResult run_width_sweep(const ProtocolBase& base,
                                 const std::vector<std::uint64_t>& seeds);

// ---------------------------------------------------------------------------
// Data sweep: cross product of training-set fractions and augmentation
// settings, each cell trained as a full seed sweep.

struct DataCell {
  double fraction = 1.0;
  AugmentSpec augment;
};

struct DataSweepResult {
  std::vector<DataCell> cells;          // fractions outer, augments inner
  std::vector<ScratchResult> per_cell;  // aligned with cells
};

DataSweepResult run_data_sweep(const ProtocolBase& base,
                               const std::vector<double>& fractions,
                               const std::vector<AugmentSpec>& augments,
                               const std::vector<std::uint64_t>& seeds);

// ---------------------------------------------------------------------------
// Aggregation.

struct SeedStat {
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double distance = 0.0;
  ShapeTag full_tag = ShapeTag::NoBarrier;
};

struct InterventionSummary {
  std::string name;
  std::vector<SeedStat> stats;
  int skipped = 0;
  ShapeTolerances tolerances;
};

InterventionSummary summary_of(const ScratchResult& r, std::string name);
InterventionSummary summary_of(const AdversarialResult& r, std::string name);
InterventionSummary summary_of(const HeightResult& r, std::string name);
InterventionSummary summary_of(const PretrainResult& r, std::string name);
InterventionSummary summary_of(const PartialResetResult& r, std::string name);
InterventionSummary summary_of(const PerGroupResult& r, std::string name);

// One table line: how an intervention's seed sweep compares to the baseline.
struct ComparisonRow {
  std::string name;
  int no_barrier = 0;
  int barrier = 0;
  int plateau = 0;
  int used = 0;
  int skipped = 0;
  double mean_accuracy = 0.0;
  std::optional<double> std_accuracy;   // needs >= 2 seeds
  double delta_mean = 0.0;              // vs baseline accuracy
  std::optional<double> delta_std;      // per-seed deltas when seeds pair up
  double mean_distance = 0.0;
  ShapeTolerances tolerances;
};

// Baseline row first, then interventions sorted by name so the table does not
// depend on input order. When an intervention ran the same seed list as the
// baseline, the accuracy delta is paired per seed.
std::vector<ComparisonRow> summarize(
    const InterventionSummary& baseline,
    const std::vector<InterventionSummary>& interventions);

// Number of completed epochs until the running train loss first reaches the
// threshold; -1 if it never does.
int epochs_to_threshold(const RunRecord& rec, double loss_threshold);

}  // namespace pathline
