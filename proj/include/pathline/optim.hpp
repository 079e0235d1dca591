#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pathline/data.hpp"
#include "pathline/nn.hpp"

namespace pathline {

enum class OptimKind { SgdMomentum, Adam };

std::string to_string(OptimKind k);
OptimKind optim_kind_from_string(const std::string& s);

struct ScheduleEntry {
  int epoch = 0;         // first epoch (0-based) at which the multiplier applies
  double multiplier = 1.0;
  bool operator==(const ScheduleEntry&) const = default;
};

// Effective learning rate at an epoch: base times the product of every
// multiplier whose epoch has been reached.
double lr_at(const std::vector<ScheduleEntry>& schedule, double base_lr, int epoch);

// Overrides replace the base lr and/or weight decay for the entries a
// selector addresses; the schedule still applies on top of an overridden lr.
struct GroupOverride {
  LayerSelector selector;
  std::optional<double> lr;
  std::optional<double> weight_decay;
};

struct OptimConfig {
  OptimKind kind = OptimKind::SgdMomentum;
  double base_lr = 0.1;
  double momentum = 0.9;  // SgdMomentum
  double beta1 = 0.9;     // Adam
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  std::vector<ScheduleEntry> schedule;
  std::vector<GroupOverride> group_overrides;

  // Rejects out-of-range hyperparameters, non-increasing schedules, selectors
  // unknown to the spec, and overlapping overrides.
  void validate(const ModelSpec& spec) const;

  // Per-entry (base lr, weight decay) after applying overrides, in entry
  // order of a ParamState built from `spec`.
  struct EntryHyper {
    double base_lr = 0.0;
    double weight_decay = 0.0;
  };
  std::vector<EntryHyper> resolve_entries(const ModelSpec& spec) const;
};

// Auxiliary optimizer arrays, layout-identical to the ParamState being
// optimized. SGD uses `m` as the velocity buffer; Adam uses `m`/`v` as the
// first/second moments plus the shared step counter.
struct OptimState {
  ParamState m;
  ParamState v;
  std::int64_t step = 0;

  static OptimState zeros_for(const ParamState& params);
};

// g <- grad + lambda*theta; v <- mu*v + g; theta <- theta - lr*v.
void sgd_momentum_step(ParamState& params, const GradState& grads, OptimState& state,
                       double lr, double mu, double lambda);

// Bias-corrected Adam on g <- grad + lambda*theta. Increments state.step once.
void adam_step(ParamState& params, const GradState& grads, OptimState& state,
               double lr, double beta1, double beta2, double eps, double lambda);

// Single-entry cores shared by the uniform steps above and by grouped
// training, where each entry can carry its own lr / weight decay.
void apply_sgd(ParamEntry& p, const ParamEntry& g, ParamEntry& vel, double lr,
               double mu, double lambda);
void apply_adam(ParamEntry& p, const ParamEntry& g, ParamEntry& m, ParamEntry& v,
                std::int64_t step, double lr, double beta1, double beta2,
                double eps, double lambda);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 500;
  std::uint64_t shuffle_seed = 0;
  int eval_every = 10;
  std::vector<int> checkpoint_epochs;  // snapshot after this many completed epochs
  AugmentSpec augment;
  // When set, training stops at the end of the first epoch whose full
  // train-split accuracy reaches the threshold. The expensive full-split check
  // only runs for epochs whose running metric already reached it.
  std::optional<double> stop_train_accuracy;

  void validate(std::size_t n_train) const;
};

// Batch-mean metrics accumulated while an epoch trains (sample-weighted, so a
// short trailing batch counts by its size).
struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
};

// Full-split evaluation after `epochs_done` completed epochs (0 = at init).
struct EvalMetrics {
  int epochs_done = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

struct ParamCheckpoint {
  int epochs_done = 0;
  ParamState params;
};

struct RunRecord {
  ModelSpec spec;
  std::uint64_t seed = 0;  // caller-assigned identity (e.g. the init seed)
  ParamState init_params;
  ParamState final_params;
  std::uint64_t init_digest = 0;
  std::uint64_t final_digest = 0;
  std::vector<EpochMetrics> epochs;
  std::vector<EvalMetrics> evals;  // always holds at least the init evaluation
  std::vector<ParamCheckpoint> checkpoints;
  bool failed = false;
  std::string failure;  // diagnostic when failed

  const EvalMetrics& final_eval() const { return evals.back(); }
};

// Deterministic minibatch training. Shuffling and augmentation draw from
// streams derived from tc.shuffle_seed only, so data order is independent of
// how `init` was produced. A non-finite training loss stops the run and marks
// it failed, preserving the partial trace.
RunRecord train(const ModelSpec& spec, const ParamState& init, const Dataset& data,
                const OptimConfig& optim, const TrainConfig& tc);

}  // namespace pathline
