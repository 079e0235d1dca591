#include "pathline/protocols.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace pathline {

std::string to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::Scratch: return "scratch";
    case ProtocolKind::AdversarialInit: return "adversarial_init";
    case ProtocolKind::HeightOfBarrierInit: return "height_of_barrier";
    case ProtocolKind::PartialReset: return "partial_reset";
    case ProtocolKind::PretrainTransfer: return "pretrain_transfer";
    case ProtocolKind::PerGroupHyper: return "per_group_hyper";
    case ProtocolKind::WidthSweep: return "width_sweep";
    case ProtocolKind::DataSweep: return "data_sweep";
  }
  throw std::logic_error("unknown protocol kind");
}

ProtocolKind protocol_kind_from_string(const std::string& s) {
  if (s == "scratch") return ProtocolKind::Scratch;
  if (s == "adversarial_init") return ProtocolKind::AdversarialInit;
  if (s == "height_of_barrier") return ProtocolKind::HeightOfBarrierInit;
  if (s == "partial_reset") return ProtocolKind::PartialReset;
  if (s == "pretrain_transfer") return ProtocolKind::PretrainTransfer;
  if (s == "per_group_hyper") return ProtocolKind::PerGroupHyper;
  if (s == "width_sweep") return ProtocolKind::WidthSweep;
  if (s == "data_sweep") return ProtocolKind::DataSweep;
  throw std::invalid_argument("unknown protocol kind: " + s);
}

std::string to_string(ResetSource s) {
  return s == ResetSource::Trained ? "trained" : "pretrained";
}

ResetSource reset_source_from_string(const std::string& s) {
  if (s == "trained") return ResetSource::Trained;
  if (s == "pretrained") return ResetSource::Pretrained;
  throw std::invalid_argument("unknown reset source: " + s);
}

std::string to_string(HyperRegime r) {
  switch (r) {
    case HyperRegime::Base: return "base";
    case HyperRegime::LowOnNoBarrier: return "low_on_no_barrier";
    case HyperRegime::LowOnBarrier: return "low_on_barrier";
    case HyperRegime::LowAll: return "low_all";
  }
  throw std::logic_error("unknown hyper regime");
}

HyperRegime hyper_regime_from_string(const std::string& s) {
  if (s == "base") return HyperRegime::Base;
  if (s == "low_on_no_barrier") return HyperRegime::LowOnNoBarrier;
  if (s == "low_on_barrier") return HyperRegime::LowOnBarrier;
  if (s == "low_all") return HyperRegime::LowAll;
  throw std::invalid_argument("unknown hyper regime: " + s);
}

std::string to_string(HyperKnob k) {
  return k == HyperKnob::LearningRate ? "learning_rate" : "weight_decay";
}

HyperKnob hyper_knob_from_string(const std::string& s) {
  if (s == "learning_rate") return HyperKnob::LearningRate;
  if (s == "weight_decay") return HyperKnob::WeightDecay;
  throw std::invalid_argument("unknown hyper knob: " + s);
}

void ProtocolBase::validate() const {
  model.validate();
  data.validate();
  optim.validate(model);
  training.validate(data.n_train);
  tolerances.validate();
  if (path_points < 3)
    throw std::invalid_argument("protocol: need >= 3 path points");
  if (data.dim() != model.input_dim)
    throw std::invalid_argument("protocol: dataset feature width " +
                                std::to_string(data.dim()) +
                                " does not match model input width " +
                                std::to_string(model.input_dim));
  if (data.num_classes != model.num_classes())
    throw std::invalid_argument("protocol: dataset classes " +
                                std::to_string(data.num_classes) +
                                " do not match model classes " +
                                std::to_string(model.num_classes()));
}

namespace {

void require_ok(const RunRecord& rec, const char* what, std::uint64_t seed) {
  if (rec.failed)
    throw std::runtime_error(std::string(what) + " run for seed " +
                             std::to_string(seed) + " failed: " + rec.failure);
}

PathReport report_path(const ModelSpec& spec, const ParamState& a,
                       const ParamState& b, const LayerSelector& sel,
                       const ProtocolBase& base) {
  PathReport r;
  r.path = evaluate_path(spec, a, b, sel, base.data, base.eval_split,
                         base.path_points);
  r.shape = classify(r.path, base.tolerances);
  return r;
}

std::vector<PathReport> report_layer_paths(const ModelSpec& spec,
                                           const ParamState& a,
                                           const ParamState& b,
                                           const ProtocolBase& base) {
  std::vector<PathReport> out;
  out.reserve(static_cast<std::size_t>(spec.layer_count()));
  for (int l = 0; l < spec.layer_count(); ++l)
    out.push_back(report_path(spec, a, b, LayerSelector::of_layers({l}), base));
  return out;
}

ScratchOutcome scratch_seed(const ProtocolBase& base, std::uint64_t seed) {
  TrainConfig tc = base.training;
  tc.shuffle_seed = seed;
  RunRecord rec =
      train(base.model, init_params(base.model, seed), base.data, base.optim, tc);
  rec.seed = seed;
  require_ok(rec, "scratch", seed);

  ScratchOutcome o;
  o.seed = seed;
  o.full = report_path(base.model, rec.init_params, rec.final_params,
                       LayerSelector::all(), base);
  o.layers = report_layer_paths(base.model, rec.init_params, rec.final_params, base);
  o.distance = relative_distance(rec.final_params, rec.init_params);
  o.record = std::move(rec);
  return o;
}

double final_train_loss(const RunRecord& rec) {
  return rec.epochs.empty() ? rec.final_eval().train_loss
                            : rec.epochs.back().train_loss;
}

}  // namespace

ScratchResult run_scratch(const ProtocolBase& base,
                          const std::vector<std::uint64_t>& seeds) {
  base.validate();
  ScratchResult res;
  res.outcomes.reserve(seeds.size());
  for (std::uint64_t seed : seeds) res.outcomes.push_back(scratch_seed(base, seed));
  return res;
}

AdversarialResult run_adversarial_init(const ProtocolBase& base,
                                       const std::vector<std::uint64_t>& seeds,
                                       const AdversarialConfig& cfg) {
  base.validate();
  const int cap = cfg.phase_a_epoch_cap > 0 ? cfg.phase_a_epoch_cap
                                            : base.training.epochs;
  if (cap < 1)
    throw std::invalid_argument("adversarial: phase-A epoch cap must be >= 1");
  if (!(cfg.memorization_threshold > 0.0 && cfg.memorization_threshold <= 1.0))
    throw std::invalid_argument(
        "adversarial: memorization threshold must lie in (0, 1]");

  AdversarialResult res;
  res.outcomes.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    const Dataset corrupt = corrupt_labels(base.data, 1.0, seed);

    TrainConfig tca = base.training;
    tca.shuffle_seed = seed;
    tca.epochs = cap;
    tca.checkpoint_epochs.clear();
    tca.stop_train_accuracy = cfg.memorization_threshold;
    RunRecord a = train(base.model, init_params(base.model, seed), corrupt,
                        base.optim, tca);
    a.seed = seed;
    require_ok(a, "adversarial phase A", seed);
    if (a.final_eval().train_accuracy < cfg.memorization_threshold)
      throw std::runtime_error(
          "adversarial phase A for seed " + std::to_string(seed) +
          " did not memorize the shuffled labels: train accuracy " +
          format_double(a.final_eval().train_accuracy) + " after the " +
          std::to_string(cap) + "-epoch cap");

    TrainConfig tcb = base.training;
    tcb.shuffle_seed = derive_seed(seed, "phase-b");
    RunRecord b = train(base.model, a.final_params, base.data, base.optim, tcb);
    b.seed = seed;
    require_ok(b, "adversarial phase B", seed);

    AdversarialOutcome o;
    o.seed = seed;
    o.full = report_path(base.model, b.init_params, b.final_params,
                         LayerSelector::all(), base);
    o.distance = relative_distance(b.final_params, b.init_params);
    o.phase_a = std::move(a);
    o.phase_b = std::move(b);
    res.outcomes.push_back(std::move(o));
  }
  return res;
}

HeightResult run_height_of_barrier(const ProtocolBase& base,
                                   const std::vector<std::uint64_t>& seeds,
                                   int offset) {
  return run_height_of_barrier(base, run_scratch(base, seeds), offset);
}

HeightResult run_height_of_barrier(const ProtocolBase& base,
                                   const ScratchResult& scratch, int offset) {
  base.validate();
  if (offset != -5 && offset != 0 && offset != 5)
    throw std::invalid_argument(
        "height restart offset must be -5, 0, or +5 grid points");

  HeightResult res;
  res.offset = offset;
  res.tolerances = base.tolerances;
  for (const ScratchOutcome& sc : scratch.outcomes) {
    if (sc.full.shape.tag != ShapeTag::Barrier) {
      res.skipped_seeds.push_back(sc.seed);
      continue;
    }
    const BarrierSummit summit = barrier_summit(sc.full.path, base.tolerances);
    const double alpha = offset < 0   ? summit.alpha_before
                         : offset > 0 ? summit.alpha_after
                                      : summit.alpha;
    const ParamState start =
        interpolate(sc.record.init_params, sc.record.final_params, alpha);

    TrainConfig tc = base.training;
    tc.shuffle_seed = derive_seed(sc.seed, "height-retrain");
    RunRecord rec = train(base.model, start, base.data, base.optim, tc);
    rec.seed = sc.seed;
    require_ok(rec, "height restart", sc.seed);

    HeightOutcome o;
    o.seed = sc.seed;
    o.offset = offset;
    o.start_alpha = alpha;
    o.full = report_path(base.model, rec.init_params, rec.final_params,
                         LayerSelector::all(), base);
    o.distance = relative_distance(rec.final_params, rec.init_params);
    o.threshold = final_train_loss(sc.record);
    o.epochs_to_threshold = epochs_to_threshold(rec, o.threshold);
    o.scratch_epochs_to_threshold = epochs_to_threshold(sc.record, o.threshold);
    o.scratch_test_accuracy = sc.record.final_eval().test_accuracy;
    o.record = std::move(rec);
    res.outcomes.push_back(std::move(o));
  }
  return res;
}

PretrainResult run_pretrain_transfer(const ProtocolBase& base,
                                     const Dataset& source_task,
                                     const std::vector<std::uint64_t>& seeds) {
  base.validate();
  source_task.validate();
  if (source_task.dim() != base.model.input_dim ||
      source_task.num_classes != base.model.num_classes())
    throw std::invalid_argument(
        "pretrain source task does not fit the model's input/output shape");

  // Fine-tuning convention: start at 1/100th of the base rate and drop by
  // another 10x halfway through.
  OptimConfig fine = base.optim;
  fine.base_lr = base.optim.base_lr / 100.0;
  fine.schedule = {{std::max(1, base.training.epochs / 2), 0.1}};

  PretrainResult res;
  res.outcomes.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    TrainConfig tca = base.training;
    tca.shuffle_seed = seed;
    tca.checkpoint_epochs.clear();
    tca.batch_size = std::min<int>(tca.batch_size,
                                   static_cast<int>(source_task.n_train));
    RunRecord a = train(base.model, init_params(base.model, seed), source_task,
                        base.optim, tca);
    a.seed = seed;
    require_ok(a, "pretrain phase A", seed);

    TrainConfig tcb = base.training;
    tcb.shuffle_seed = derive_seed(seed, "transfer");
    RunRecord b = train(base.model, a.final_params, base.data, fine, tcb);
    b.seed = seed;
    require_ok(b, "fine-tune phase B", seed);

    PretrainOutcome o;
    o.seed = seed;
    o.full = report_path(base.model, b.init_params, b.final_params,
                         LayerSelector::all(), base);
    o.distance = relative_distance(b.final_params, b.init_params);
    o.phase_a = std::move(a);
    o.phase_b = std::move(b);
    res.outcomes.push_back(std::move(o));
  }
  return res;
}

namespace {

PartialResetOutcome reset_seed(const ProtocolBase& base, std::uint64_t seed,
                               const LayerSelector& sel, const ParamState& donor) {
  ParamState start = donor;
  const ParamState fresh = init_params(base.model, derive_seed(seed, "reset"));
  for (std::size_t idx : select(start, sel).selected)
    start.entries[idx].values = fresh.entries[idx].values;

  TrainConfig tc = base.training;
  tc.shuffle_seed = derive_seed(seed, "reset-retrain");
  RunRecord rec = train(base.model, start, base.data, base.optim, tc);
  rec.seed = seed;
  require_ok(rec, "partial reset", seed);

  PartialResetOutcome o;
  o.seed = seed;
  o.source_digest = donor.digest();
  o.full = report_path(base.model, rec.init_params, rec.final_params,
                       LayerSelector::all(), base);
  o.distance = relative_distance(rec.final_params, rec.init_params);
  o.record = std::move(rec);
  return o;
}

}  // namespace

PartialResetResult run_partial_reset(const ProtocolBase& base,
                                     const std::vector<std::uint64_t>& seeds,
                                     const LayerSelector& sel, ResetSource source,
                                     const Dataset* source_task) {
  base.validate();
  sel.validate(base.model);
  PartialResetResult res;
  res.selector = sel;
  res.source = source;
  if (source == ResetSource::Trained) {
    const ScratchResult scratch = run_scratch(base, seeds);
    for (const ScratchOutcome& sc : scratch.outcomes)
      res.outcomes.push_back(
          reset_seed(base, sc.seed, sel, sc.record.final_params));
    return res;
  }
  if (source_task == nullptr)
    throw std::invalid_argument(
        "partial reset from a pretrained state needs the source task dataset");
  source_task->validate();
  if (source_task->dim() != base.model.input_dim ||
      source_task->num_classes != base.model.num_classes())
    throw std::invalid_argument(
        "pretrain source task does not fit the model's input/output shape");
  for (std::uint64_t seed : seeds) {
    // The donor is the pre-training run itself (the transfer recipe's first
    // phase), reproduced here without the fine-tuning half.
    TrainConfig tca = base.training;
    tca.shuffle_seed = seed;
    tca.checkpoint_epochs.clear();
    tca.batch_size = std::min<int>(tca.batch_size,
                                   static_cast<int>(source_task->n_train));
    RunRecord a = train(base.model, init_params(base.model, seed), *source_task,
                        base.optim, tca);
    a.seed = seed;
    require_ok(a, "pretrain phase A", seed);
    res.outcomes.push_back(reset_seed(base, seed, sel, a.final_params));
  }
  return res;
}

PartialResetResult run_partial_reset(const ProtocolBase& base,
                                     const ScratchResult& scratch,
                                     const LayerSelector& sel) {
  base.validate();
  sel.validate(base.model);
  PartialResetResult res;
  res.selector = sel;
  res.source = ResetSource::Trained;
  for (const ScratchOutcome& sc : scratch.outcomes)
    res.outcomes.push_back(reset_seed(base, sc.seed, sel, sc.record.final_params));
  return res;
}

PerGroupResult run_per_group_hyper(const ProtocolBase& base,
                                   const std::vector<std::uint64_t>& seeds,
                                   HyperRegime regime, HyperKnob knob,
                                   double factor) {
  return run_per_group_hyper(base, run_scratch(base, seeds), regime, knob, factor);
}

PerGroupResult run_per_group_hyper(const ProtocolBase& base,
                                   const ScratchResult& scratch,
                                   HyperRegime regime, HyperKnob knob,
                                   double factor) {
  base.validate();
  if (knob == HyperKnob::LearningRate && !(factor > 0.0))
    throw std::invalid_argument("per-group learning-rate factor must be > 0");
  if (knob == HyperKnob::WeightDecay && factor < 0.0)
    throw std::invalid_argument("per-group weight decay must be >= 0");

  PerGroupResult res;
  res.regime = regime;
  res.knob = knob;
  res.factor = factor;
  for (const ScratchOutcome& sc : scratch.outcomes) {
    PerGroupOutcome o;
    o.seed = sc.seed;
    o.stage1_layer_tags.reserve(sc.layers.size());
    for (const PathReport& lp : sc.layers)
      o.stage1_layer_tags.push_back(lp.shape.tag);

    for (int l = 0; l < base.model.layer_count(); ++l) {
      const bool is_barrier =
          o.stage1_layer_tags[static_cast<std::size_t>(l)] == ShapeTag::Barrier;
      const bool touched = regime == HyperRegime::LowAll ||
                           (regime == HyperRegime::LowOnBarrier && is_barrier) ||
                           (regime == HyperRegime::LowOnNoBarrier && !is_barrier);
      if (touched) o.override_layers.push_back(l);
    }

    OptimConfig oc = base.optim;
    if (!o.override_layers.empty()) {
      GroupOverride go;
      go.selector = LayerSelector::of_layers(
          {o.override_layers.begin(), o.override_layers.end()});
      if (knob == HyperKnob::LearningRate)
        go.lr = base.optim.base_lr * factor;
      else
        go.weight_decay = factor;
      oc.group_overrides.push_back(go);
    }

    TrainConfig tc = base.training;
    tc.shuffle_seed = sc.seed;
    RunRecord rec =
        train(base.model, init_params(base.model, sc.seed), base.data, oc, tc);
    rec.seed = sc.seed;
    require_ok(rec, "per-group retrain", sc.seed);

    o.full = report_path(base.model, rec.init_params, rec.final_params,
                         LayerSelector::all(), base);
    o.layers = report_layer_paths(base.model, rec.init_params, rec.final_params,
                                  base);
    o.distance = relative_distance(rec.final_params, rec.init_params);
    o.record = std::move(rec);
    res.outcomes.push_back(std::move(o));
  }
  return res;
}

std::vector<WidthPlan> width_sweep_plans() {
  return {
      {"all-50", {50, 50, 50, 50, 50, 50}},
      {"all-500", {500, 500, 500, 500, 500, 500}},
      {"mixed-500-25", {500, 500, 500, 500, 25, 25}},
  };
}

WidthSweepResult run_width_sweep(const ProtocolBase& base,
                                 const std::vector<std::uint64_t>& seeds) {
  WidthSweepResult res;
  res.plans = width_sweep_plans();
  res.per_plan.reserve(res.plans.size());
  for (const WidthPlan& plan : res.plans) {
    ProtocolBase b = base;
    b.model.hidden_widths = plan.hidden_widths;
    res.per_plan.push_back(run_scratch(b, seeds));
  }
  return res;
}

DataSweepResult run_data_sweep(const ProtocolBase& base,
                               const std::vector<double>& fractions,
                               const std::vector<AugmentSpec>& augments,
                               const std::vector<std::uint64_t>& seeds) {
  base.validate();
  if (fractions.empty() || augments.empty())
    throw std::invalid_argument("data sweep needs at least one fraction and one "
                                "augmentation setting");
  DataSweepResult res;
  for (double f : fractions) {
    // The subsample for a fraction is fixed across cells and seeds, keyed by
    // the fraction's own bits so reordering the sweep does not change it.
    const Dataset cut =
        subset(base.data, f, derive_seed(std::bit_cast<std::uint64_t>(f),
                                         "data-sweep-fraction"));
    for (const AugmentSpec& g : augments) {
      ProtocolBase b = base;
      b.data = cut;
      b.training.augment = g;
      b.training.batch_size = std::min<int>(b.training.batch_size,
                                            static_cast<int>(cut.n_train));
      res.cells.push_back({f, g});
      res.per_cell.push_back(run_scratch(b, seeds));
    }
  }
  return res;
}

namespace {

double final_test_accuracy(const ScratchOutcome& o) {
  return o.record.final_eval().test_accuracy;
}
double final_test_accuracy(const AdversarialOutcome& o) {
  return o.phase_b.final_eval().test_accuracy;
}
double final_test_accuracy(const HeightOutcome& o) {
  return o.record.final_eval().test_accuracy;
}
double final_test_accuracy(const PretrainOutcome& o) {
  return o.phase_b.final_eval().test_accuracy;
}
double final_test_accuracy(const PartialResetOutcome& o) {
  return o.record.final_eval().test_accuracy;
}
double final_test_accuracy(const PerGroupOutcome& o) {
  return o.record.final_eval().test_accuracy;
}

template <typename Result>
InterventionSummary collect(const Result& r, std::string name, int skipped) {
  InterventionSummary s;
  s.name = std::move(name);
  s.skipped = skipped;
  s.stats.reserve(r.outcomes.size());
  for (const auto& o : r.outcomes) {
    SeedStat st;
    st.seed = o.seed;
    st.test_accuracy = final_test_accuracy(o);
    st.distance = o.distance;
    st.full_tag = o.full.shape.tag;
    s.stats.push_back(st);
    s.tolerances = o.full.shape.tolerances;
  }
  return s;
}

}  // namespace

InterventionSummary summary_of(const ScratchResult& r, std::string name) {
  return collect(r, std::move(name), 0);
}
InterventionSummary summary_of(const AdversarialResult& r, std::string name) {
  return collect(r, std::move(name), 0);
}
InterventionSummary summary_of(const HeightResult& r, std::string name) {
  InterventionSummary s =
      collect(r, std::move(name), static_cast<int>(r.skipped_seeds.size()));
  s.tolerances = r.tolerances;
  return s;
}
InterventionSummary summary_of(const PretrainResult& r, std::string name) {
  return collect(r, std::move(name), 0);
}
InterventionSummary summary_of(const PartialResetResult& r, std::string name) {
  return collect(r, std::move(name), 0);
}
InterventionSummary summary_of(const PerGroupResult& r, std::string name) {
  return collect(r, std::move(name), 0);
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::optional<double> sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

ComparisonRow make_row(const InterventionSummary& iv,
                       const InterventionSummary& baseline) {
  ComparisonRow row;
  row.name = iv.name;
  row.used = static_cast<int>(iv.stats.size());
  row.skipped = iv.skipped;
  row.tolerances = iv.tolerances;

  std::vector<double> accs, dists;
  for (const SeedStat& st : iv.stats) {
    switch (st.full_tag) {
      case ShapeTag::NoBarrier: ++row.no_barrier; break;
      case ShapeTag::Barrier: ++row.barrier; break;
      case ShapeTag::Plateau: ++row.plateau; break;
    }
    accs.push_back(st.test_accuracy);
    dists.push_back(st.distance);
  }
  row.mean_accuracy = mean_of(accs);
  row.std_accuracy = sample_std(accs, row.mean_accuracy);
  row.mean_distance = mean_of(dists);

  // Pair the accuracy deltas per seed when the intervention ran the same seed
  // list as the baseline; otherwise fall back to the difference of means.
  const bool paired =
      !iv.stats.empty() && iv.stats.size() == baseline.stats.size() &&
      std::equal(iv.stats.begin(), iv.stats.end(), baseline.stats.begin(),
                 [](const SeedStat& a, const SeedStat& b) {
                   return a.seed == b.seed;
                 });
  if (paired) {
    std::vector<double> deltas(iv.stats.size());
    for (std::size_t i = 0; i < iv.stats.size(); ++i)
      deltas[i] = iv.stats[i].test_accuracy - baseline.stats[i].test_accuracy;
    row.delta_mean = mean_of(deltas);
    row.delta_std = sample_std(deltas, row.delta_mean);
  } else {
    const double base_mean = [&] {
      std::vector<double> b;
      for (const SeedStat& st : baseline.stats) b.push_back(st.test_accuracy);
      return mean_of(b);
    }();
    row.delta_mean = iv.stats.empty() ? 0.0 : row.mean_accuracy - base_mean;
    row.delta_std = std::nullopt;
  }
  return row;
}

}  // namespace

std::vector<ComparisonRow> summarize(
    const InterventionSummary& baseline,
    const std::vector<InterventionSummary>& interventions) {
  if (baseline.stats.empty() && interventions.empty()) return {};
  if (baseline.stats.empty())
    throw std::invalid_argument("summarize: the baseline has no seeds");

  std::vector<ComparisonRow> rows;
  rows.reserve(interventions.size() + 1);
  rows.push_back(make_row(baseline, baseline));

  std::vector<const InterventionSummary*> order;
  order.reserve(interventions.size());
  for (const InterventionSummary& iv : interventions) order.push_back(&iv);
  std::sort(order.begin(), order.end(),
            [](const InterventionSummary* a, const InterventionSummary* b) {
              return a->name < b->name;
            });
  for (const InterventionSummary* iv : order)
    rows.push_back(make_row(*iv, baseline));
  return rows;
}

int epochs_to_threshold(const RunRecord& rec, double loss_threshold) {
  for (const EpochMetrics& em : rec.epochs)
    if (em.train_loss <= loss_threshold) return em.epoch + 1;
  return -1;
}

}  // namespace pathline
