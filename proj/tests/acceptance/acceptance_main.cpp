// Acceptance gate: one self-contained check per numbered criterion, each
// printed as a [PASS]/[FAIL] line with its runtime. Heavy training sweeps are
// shared between criteria where the recipes coincide. Run with no arguments
// for the full gate, or pass --criterion N (repeatable) to select a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pathline/protocols.hpp"
#include "pathline/report.hpp"

using namespace pathline;
namespace fs = std::filesystem;

#ifndef PATHLINE_BIN
#define PATHLINE_BIN "pathline"
#endif

namespace {

// ---------------------------------------------------------------------------
// Bookkeeping.

struct Checker {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  template <typename T>
  void expect_eq(const T& got, const T& want, const std::string& what) {
    if (!(got == want)) {
      std::ostringstream os;
      os << what << " (got " << got << ", want " << want << ")";
      failures.push_back(os.str());
    }
  }
  void expect_ge(double got, double want, const std::string& what) {
    if (!(got >= want)) {
      std::ostringstream os;
      os << what << " (got " << got << ", need >= " << want << ")";
      failures.push_back(os.str());
    }
  }
  void expect_lt(double got, double want, const std::string& what) {
    if (!(got < want)) {
      std::ostringstream os;
      os << what << " (got " << got << ", need < " << want << ")";
      failures.push_back(os.str());
    }
  }
};

std::vector<std::uint64_t> seed_range(int n) {
  std::vector<std::uint64_t> s;
  for (int i = 1; i <= n; ++i) s.push_back(static_cast<std::uint64_t>(i));
  return s;
}

double mean(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

// Shared heavy results, computed on first use so a filtered invocation only
// pays for what it checks.
struct SharedRuns {
  // Spiral barrier sweep: 2-50-50-1, Adam 5e-4, batch 500, 1000 epochs.
  ProtocolBase spiral_base;
  std::unique_ptr<ScratchResult> spiral_scratch;

  const ScratchResult& spiral_sweep() {
    if (!spiral_scratch) {
      spiral_base = make_spiral_base();
      spiral_scratch = std::make_unique<ScratchResult>(
          run_scratch(spiral_base, seed_range(10)));
    }
    return *spiral_scratch;
  }

  static ProtocolBase make_spiral_base() {
    ProtocolBase base;
    base.model.input_dim = 2;
    base.model.hidden_widths = {50, 50};
    base.model.output_dim = 1;
    base.data = spiral(10000, 5000, 0.02, 0);
    base.optim.kind = OptimKind::Adam;
    base.optim.base_lr = 5e-4;
    base.training.epochs = 1000;
    base.training.batch_size = 500;
    base.training.eval_every = 1000;
    base.path_points = 51;
    return base;
  }
};

// ---------------------------------------------------------------------------
// 1. Gradients against central finite differences.

void criterion_gradients(Checker& ck) {
  std::mt19937_64 rng(411);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    ModelSpec spec;
    spec.input_dim = 1 + static_cast<int>(rng() % 8);
    const int depth = 1 + static_cast<int>(rng() % 2);
    for (int l = 0; l < depth; ++l)
      spec.hidden_widths.push_back(1 + static_cast<int>(rng() % 32));
    if (rng() % 2 == 0) {
      spec.loss = LossKind::BinaryCrossEntropy;
      spec.output_dim = 1;
    } else {
      spec.loss = LossKind::SoftmaxCrossEntropy;
      spec.output_dim = 2 + static_cast<int>(rng() % 4);
    }

    const int batch = 1 + static_cast<int>(rng() % 8);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::MatrixXd x(batch, spec.input_dim);
    std::vector<int> y(batch);
    ParamState params;
    // Redraw until every ReLU argument clears a safety margin: a central
    // difference that straddles the kink reports the average of two slopes,
    // not the subgradient the backward pass is defined to return.
    for (;;) {
      for (int r = 0; r < batch; ++r)
        for (int c = 0; c < spec.input_dim; ++c) x(r, c) = 2.0 * unit(rng);
      for (int r = 0; r < batch; ++r)
        y[r] = static_cast<int>(rng() %
                                static_cast<std::uint64_t>(spec.num_classes()));
      params = init_params(spec, rng());
      double closest = 1.0;
      for (int l = 1; l <= static_cast<int>(spec.hidden_widths.size()); ++l) {
        const Eigen::MatrixXd before = forward_prefix(spec, params, l - 1, x);
        const auto& w = params.entries[2 * (l - 1)].matrix();
        const auto& b = params.entries[2 * (l - 1) + 1].vector();
        const Eigen::MatrixXd z =
            (before * w.transpose()).rowwise() + b.transpose();
        closest = std::min(closest, z.array().abs().minCoeff());
      }
      if (closest > 1e-3) break;
    }
    const GradState grad = backward(spec, params, x, y).grad;

    const double h = 1e-6;
    double err = 0.0, scale = 1.0;
    for (std::size_t e = 0; e < params.entries.size(); ++e) {
      for (std::size_t i = 0; i < params.entries[e].values.size(); ++i) {
        double& w = params.entries[e].values[i];
        const double keep = w;
        w = keep + h;
        const double up = forward(spec, params, x, y).loss;
        w = keep - h;
        const double dn = forward(spec, params, x, y).loss;
        w = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double an = grad.entries[e].values[i];
        err = std::max(err, std::abs(fd - an));
        scale = std::max(scale, std::abs(an));
      }
    }
    worst = std::max(worst, err / scale);
  }
  ck.expect_lt(worst, 1e-5, "finite-difference agreement over 50 instances");
}

// ---------------------------------------------------------------------------
// 2. Interpolation exactness.

void criterion_interpolation(Checker& ck) {
  std::mt19937_64 rng(412);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    ModelSpec spec;
    spec.input_dim = 1 + static_cast<int>(rng() % 6);
    spec.hidden_widths = {1 + static_cast<int>(rng() % 16),
                          1 + static_cast<int>(rng() % 16)};
    spec.output_dim = 1;
    const ParamState a = init_params(spec, rng());
    const ParamState b = init_params(spec, rng());

    ck.expect(interpolate(a, b, 0.0).digest() == a.digest(),
              "alpha=0 reproduces the first endpoint bitwise");
    ck.expect(interpolate(a, b, 1.0).digest() == b.digest(),
              "alpha=1 reproduces the second endpoint bitwise");

    const double alpha = unit(rng), beta = unit(rng);
    const ParamState inner = interpolate(a, b, beta);
    const ParamState composed = interpolate(a, inner, alpha);
    const ParamState direct = interpolate(a, b, alpha * beta);
    double diff = 0.0;
    for (std::size_t e = 0; e < direct.entries.size(); ++e)
      for (std::size_t i = 0; i < direct.entries[e].values.size(); ++i)
        diff = std::max(diff, std::abs(composed.entries[e].values[i] -
                                       direct.entries[e].values[i]));
    ck.expect_lt(diff, 1e-12, "affine composition identity");
  }
}

// ---------------------------------------------------------------------------
// 3. Shape classifier against the brute-force set definition.

struct OracleShape {
  ShapeTag tag = ShapeTag::NoBarrier;
  std::size_t summit = 0;
  std::size_t drop = 0;
};

OracleShape oracle_classify(const std::vector<double>& loss,
                            const ShapeTolerances& tol) {
  const std::size_t k = loss.size();
  const double l0 = loss.front();
  const double l1 = loss.back();
  const double peak = *std::max_element(loss.begin(), loss.end());
  std::size_t astar = 0;
  while (loss[astar] != peak) ++astar;  // earliest index attaining the max

  OracleShape out;
  if (peak > (1.0 + tol.rise_tol) * std::max(l0, l1)) {
    std::size_t run_start = astar;
    while (run_start > 0 && loss[run_start - 1] < loss[run_start]) --run_start;
    if (run_start < astar) {
      out.tag = ShapeTag::Barrier;
      out.summit = astar;
      return out;
    }
  }

  const std::size_t flat_count = static_cast<std::size_t>(
      std::ceil(tol.plateau_span * static_cast<double>(k)));
  bool flat = true;
  for (std::size_t i = 0; i < std::min(flat_count, k); ++i)
    if (std::abs(loss[i] - l0) > tol.plateau_tol * l0) flat = false;
  if (flat && l1 < (1.0 - tol.plateau_tol) * l0) {
    for (std::size_t i = 0; i < k; ++i)
      if (std::abs(loss[i] - l0) > tol.plateau_tol * l0) {
        out.tag = ShapeTag::Plateau;
        out.drop = i;
        return out;
      }
  }
  return out;
}

InterpPath synthetic_path(const std::vector<double>& losses) {
  InterpPath p;
  const std::size_t k = losses.size();
  for (std::size_t i = 0; i < k; ++i)
    p.alphas.push_back(static_cast<double>(i) / static_cast<double>(k - 1));
  p.losses = losses;
  p.accuracies.assign(k, 0.5);
  return p;
}

void criterion_classifier(Checker& ck) {
  const ShapeTolerances tol;
  std::mt19937_64 rng(413);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int disagree = 0, scale_broken = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 3 + rng() % 10;  // 3 <= K <= 12
    std::vector<double> losses(k);
    // Mix flat, monotone, and spiky families so every branch gets traffic.
    const int family = static_cast<int>(rng() % 4);
    double level = 0.5 + unit(rng);
    for (std::size_t i = 0; i < k; ++i) {
      switch (family) {
        case 0: losses[i] = level * (1.0 + 0.02 * (unit(rng) - 0.5)); break;
        case 1: losses[i] = level * (1.0 - 0.9 * static_cast<double>(i) /
                                               static_cast<double>(k)); break;
        case 2: losses[i] = level + std::sin(3.0 * unit(rng)) * unit(rng); break;
        default: losses[i] = unit(rng) * 2.0; break;
      }
      losses[i] = std::max(losses[i], 1e-3);
    }
    if (family == 0 && k >= 4 && rng() % 2 == 0)
      losses[k - 1] = level * 0.1;  // flat run, then a late fall

    const PathShape got = classify(synthetic_path(losses), tol);
    const OracleShape want = oracle_classify(losses, tol);
    bool same = got.tag == want.tag;
    if (same && got.tag == ShapeTag::Barrier) same = got.summit_index == want.summit;
    if (same && got.tag == ShapeTag::Plateau) same = got.drop_index == want.drop;
    if (!same) ++disagree;

    // Positive scaling preserves the tag and the landmark indices.
    const double c = std::exp(4.0 * (unit(rng) - 0.5));
    std::vector<double> scaled = losses;
    for (double& v : scaled) v *= c;
    const PathShape got2 = classify(synthetic_path(scaled), tol);
    bool inv = got2.tag == got.tag;
    if (inv && got.tag == ShapeTag::Barrier)
      inv = got2.summit_index == got.summit_index;
    if (inv && got.tag == ShapeTag::Plateau)
      inv = got2.drop_index == got.drop_index;
    if (!inv) ++scale_broken;
  }
  ck.expect_eq(disagree, 0, "classifier/oracle disagreements over 10^4 paths");
  ck.expect_eq(scale_broken, 0, "positive-scaling invariance violations");
}

// ---------------------------------------------------------------------------
// 4. Spiral barrier sweep vs easy-blobs control.

void criterion_spiral_barrier(Checker& ck, SharedRuns& shared) {
  const ScratchResult& sc = shared.spiral_sweep();
  int barrier = 0;
  for (const auto& o : sc.outcomes)
    if (o.full.shape.tag == ShapeTag::Barrier) ++barrier;
  ck.expect_ge(barrier, 7, "spiral full-model Barrier seeds out of 10");

  ProtocolBase blob_base = SharedRuns::make_spiral_base();
  blob_base.data = blobs(10000, 5000, 6.0, 1.0, 0);
  blob_base.training.epochs = 300;
  blob_base.training.eval_every = 300;
  const ScratchResult bl = run_scratch(blob_base, seed_range(10));
  int nb = 0;
  for (const auto& o : bl.outcomes)
    if (o.full.shape.tag == ShapeTag::NoBarrier) ++nb;
  ck.expect_ge(nb, 8, "easy-blobs NoBarrier seeds out of 10");
}

// ---------------------------------------------------------------------------
// 5. Width plans: narrow keeps the barrier, widened plans lose it.

ProtocolBase width_sweep_base() {
  ProtocolBase base;
  base.model.input_dim = 2;
  base.model.hidden_widths = {50, 50, 50, 50, 50, 50};
  base.model.output_dim = 1;
  base.data = spiral(10000, 5000, 0.02, 0);
  base.optim.kind = OptimKind::Adam;
  base.optim.base_lr = 1e-3;
  base.training.epochs = 250;
  base.training.batch_size = 500;
  base.training.eval_every = 250;
  base.training.stop_train_accuracy = 1.0;
  base.path_points = 51;
  return base;
}

void criterion_width_plans(Checker& ck) {
  const WidthSweepResult ws = run_width_sweep(width_sweep_base(), seed_range(10));
  for (std::size_t p = 0; p < ws.plans.size(); ++p) {
    const std::string& name = ws.plans[p].name;
    const ScratchResult& sc = ws.per_plan[p];
    int barrier = 0, nb = 0, acc_ok = 0;
    int early = 0, late = 0;
    std::size_t early_layers = 0, late_layers = 0;
    for (const auto& o : sc.outcomes) {
      if (o.full.shape.tag == ShapeTag::Barrier) ++barrier;
      if (o.full.shape.tag == ShapeTag::NoBarrier) ++nb;
      if (o.record.final_eval().test_accuracy >= 0.995) ++acc_ok;
      early_layers = late_layers = 0;
      for (std::size_t l = 0; l < o.layers.size(); ++l) {
        (l < 4 ? early_layers : late_layers) += 1;
        if (o.layers[l].shape.tag == ShapeTag::Barrier) {
          if (l < 4) ++early;
          else ++late;
        }
      }
    }
    ck.expect_eq(acc_ok, static_cast<int>(sc.outcomes.size()),
                 name + ": seeds reaching test accuracy 0.995");
    if (name == "all-50") {
      ck.expect_ge(barrier, 6, name + ": full-model Barrier seeds out of 10");
      // Frequency, not count: the early and late groups hold different
      // numbers of layers.
      const double ef = static_cast<double>(early) / static_cast<double>(early_layers);
      const double lf = static_cast<double>(late) / static_cast<double>(late_layers);
      ck.expect(ef > lf,
                name + ": early-layer barrier frequency must exceed late-layer "
                "(got " + std::to_string(early) + "/" + std::to_string(early_layers) +
                " vs " + std::to_string(late) + "/" + std::to_string(late_layers) +
                " per seed)");
    } else {
      ck.expect_ge(nb, 8, name + ": full-model NoBarrier seeds out of 10");
    }
  }
}

// ---------------------------------------------------------------------------
// 6. Summit restarts: drop the barrier, keep the accuracy, converge faster.

void criterion_summit_restart(Checker& ck, SharedRuns& shared) {
  const ScratchResult& sc = shared.spiral_sweep();

  std::map<int, HeightResult> by_offset;
  for (int off : {0, -5, 5})
    by_offset.emplace(off, run_height_of_barrier(shared.spiral_base, sc, off));

  const HeightResult& at0 = by_offset.at(0);
  const std::size_t n = at0.outcomes.size();
  ck.expect(n > 0, "no qualifying Barrier seeds to restart from");
  if (n == 0) return;

  int nb = 0, fewer = 0;
  std::vector<double> acc, scratch_acc;
  for (const auto& o : at0.outcomes) {
    if (o.full.shape.tag == ShapeTag::NoBarrier) ++nb;
    acc.push_back(o.record.final_eval().test_accuracy);
    scratch_acc.push_back(o.scratch_test_accuracy);
    if (o.epochs_to_threshold >= 0 && o.scratch_epochs_to_threshold >= 0 &&
        o.epochs_to_threshold < o.scratch_epochs_to_threshold)
      ++fewer;
  }
  ck.expect_ge(static_cast<double>(nb) / static_cast<double>(n), 0.7,
               "NoBarrier fraction among summit restarts");
  ck.expect_ge(mean(acc), mean(scratch_acc) - 0.002,
               "summit-restart mean accuracy vs scratch");
  ck.expect(fewer * 2 > static_cast<int>(n),
            "majority of restarts reach the scratch loss threshold in fewer "
            "epochs (got " + std::to_string(fewer) + "/" + std::to_string(n) + ")");

  for (int off : {-5, 5}) {
    std::vector<double> acc_off;
    for (const auto& o : by_offset.at(off).outcomes)
      acc_off.push_back(o.record.final_eval().test_accuracy);
    ck.expect_lt(std::abs(mean(acc_off) - mean(acc)), 0.01,
                 "offset " + std::to_string(off) +
                 " mean accuracy stays within 0.01 of the summit restart");
  }
}

// ---------------------------------------------------------------------------
// 7. Memorized-shuffled-labels init hurts final accuracy.

void criterion_adversarial(Checker& ck) {
  // Overlapping clouds: generalizing through the overlap wants a smooth
  // boundary, which is exactly what a memorized-noise initialization lacks.
  // The training set is small enough to memorize inside the epoch cap.
  ProtocolBase base;
  base.model.input_dim = 2;
  base.model.hidden_widths = {64, 64};
  base.model.output_dim = 1;
  base.data = blobs(100, 2000, 3.5, 1.0, 0);
  base.optim.kind = OptimKind::Adam;
  base.optim.base_lr = 3e-3;
  base.training.epochs = 300;
  base.training.batch_size = 25;
  base.training.eval_every = 300;
  base.path_points = 51;

  const auto seeds = seed_range(10);
  const ScratchResult sc = run_scratch(base, seeds);
  std::vector<double> scratch_acc;
  for (const auto& o : sc.outcomes)
    scratch_acc.push_back(o.record.final_eval().test_accuracy);

  AdversarialConfig cfg;
  cfg.phase_a_epoch_cap = 12000;
  const AdversarialResult adv = run_adversarial_init(base, seeds, cfg);
  std::vector<double> adv_acc;
  double worst_memo = 1.0;
  for (const auto& o : adv.outcomes) {
    adv_acc.push_back(o.phase_b.final_eval().test_accuracy);
    worst_memo = std::min(worst_memo, o.phase_a.final_eval().train_accuracy);
  }
  ck.expect_ge(worst_memo, 0.999, "every phase A memorizes the shuffled labels");
  ck.expect_lt(mean(adv_acc), mean(scratch_acc),
               "memorized-init mean accuracy strictly below scratch");
}

// ---------------------------------------------------------------------------
// 8. Per-group learning rates: slowing barrier layers costs accuracy.

void criterion_per_group(Checker& ck) {
  ProtocolBase base;
  base.model.input_dim = 2;
  base.model.hidden_widths = {50, 50, 50, 50, 50, 50};
  base.model.output_dim = 1;
  base.data = spiral(10000, 5000, 0.02, 0);
  base.optim.kind = OptimKind::Adam;
  base.optim.base_lr = 1e-3;
  base.training.epochs = 150;
  base.training.batch_size = 500;
  base.training.eval_every = 150;
  base.training.stop_train_accuracy = 1.0;
  base.path_points = 51;

  const auto seeds = seed_range(10);
  const ScratchResult sc = run_scratch(base, seeds);

  const auto acc_of = [](const PerGroupResult& r) {
    std::vector<double> acc;
    for (const auto& o : r.outcomes)
      acc.push_back(o.record.final_eval().test_accuracy);
    return mean(acc);
  };
  const PerGroupResult rb = run_per_group_hyper(base, sc, HyperRegime::Base,
                                                HyperKnob::LearningRate, 0.1);
  const PerGroupResult rnb = run_per_group_hyper(
      base, sc, HyperRegime::LowOnNoBarrier, HyperKnob::LearningRate, 0.1);
  const PerGroupResult rba = run_per_group_hyper(
      base, sc, HyperRegime::LowOnBarrier, HyperKnob::LearningRate, 0.1);
  const PerGroupResult rall = run_per_group_hyper(
      base, sc, HyperRegime::LowAll, HyperKnob::LearningRate, 0.1);

  std::printf(
      "    regime means: base %.4f  low-on-nb %.4f  low-on-b %.4f  low-all %.4f\n",
      acc_of(rb), acc_of(rnb), acc_of(rba), acc_of(rall));
  ck.expect_ge(acc_of(rb), acc_of(rnb),
               "base mean accuracy >= low-rate-on-no-barrier mean");
  ck.expect(acc_of(rnb) > acc_of(rba),
            "low-rate-on-no-barrier mean must exceed low-rate-on-barrier mean");

  int with_overrides = 0, lost = 0;
  for (const auto& o : rba.outcomes) {
    if (o.override_layers.empty()) continue;
    ++with_overrides;
    bool all_lost = true;
    for (int l : o.override_layers)
      if (o.layers[static_cast<std::size_t>(l)].shape.tag == ShapeTag::Barrier)
        all_lost = false;
    if (all_lost) ++lost;
  }
  ck.expect(with_overrides > 0, "no seeds carried barrier-layer overrides");
  if (with_overrides > 0)
    ck.expect_ge(static_cast<double>(lost) / with_overrides, 0.7,
                 "barrier layers losing their tag under the low rate");
}

// ---------------------------------------------------------------------------
// 9. Relative distance: exact examples, homogeneity, rate ordering.

void criterion_distance(Checker& ck) {
  ModelSpec spec;
  spec.input_dim = 3;
  spec.hidden_widths = {4};
  spec.output_dim = 1;

  // Identical states -> 0; all-ones vs all-twos -> exactly 1.
  ParamState ones = init_params(spec, 1);
  for (auto& e : ones.entries) std::fill(e.values.begin(), e.values.end(), 1.0);
  ParamState twos = ones;
  for (auto& e : twos.entries) std::fill(e.values.begin(), e.values.end(), 2.0);
  ck.expect_lt(std::abs(relative_distance(ones, ones)), 1e-12,
               "distance of a state to itself");
  ck.expect_lt(std::abs(relative_distance(twos, ones) - 1.0), 1e-12,
               "all-ones to all-twos distance");

  // Scaling both states together leaves the measure unchanged.
  std::mt19937_64 rng(419);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ParamState a = init_params(spec, rng());
    const ParamState b = init_params(spec, rng());
    const double c = std::exp(6.0 * (unit(rng) - 0.5)) *
                     (rng() % 2 == 0 ? 1.0 : -1.0);
    ParamState sa = a, sb = b;
    for (auto& e : sa.entries) for (double& v : e.values) v *= c;
    for (auto& e : sb.entries) for (double& v : e.values) v *= c;
    worst = std::max(worst, std::abs(relative_distance(sb, sa) -
                                     relative_distance(b, a)));
  }
  ck.expect_lt(worst, 1e-12, "homogeneity over 100 random pairs");

  // Smaller fixed rates move the parameters relatively less.
  std::vector<double> means;
  for (double lr : {0.1, 0.01, 0.001}) {
    ProtocolBase base;
    base.model.input_dim = 2;
    base.model.hidden_widths = {50, 50};
    base.model.output_dim = 1;
    base.data = spiral(10000, 5000, 0.02, 0);
    base.optim.kind = OptimKind::SgdMomentum;
    base.optim.base_lr = lr;
    base.optim.momentum = 0.0;
    base.training.epochs = 100;
    base.training.batch_size = 500;
    base.training.eval_every = 100;
    base.path_points = 51;
    const ScratchResult sc = run_scratch(base, seed_range(5));
    std::vector<double> d;
    for (const auto& o : sc.outcomes) d.push_back(o.distance);
    means.push_back(mean(d));
  }
  ck.expect(means[0] > means[1] && means[1] > means[2],
            "mean distance must fall strictly with the rate (got " +
            std::to_string(means[0]) + ", " + std::to_string(means[1]) + ", " +
            std::to_string(means[2]) + ")");
}

// ---------------------------------------------------------------------------
// 10. Bitwise reruns through the command-line tool.

void criterion_determinism(Checker& ck) {
  const fs::path root = fs::temp_directory_path() / "pathline-acceptance-rerun";
  std::error_code ec;
  fs::remove_all(root, ec);
  fs::create_directories(root);

  const fs::path cfg_path = root / "config.json";
  {
    std::ofstream out(cfg_path);
    out << R"({
  "model": {"input_dim": 2, "hidden": [16, 16], "output_dim": 1},
  "dataset": {"kind": "blobs", "n_train": 1000, "n_test": 500,
              "separation": 6.0, "sigma": 1.0, "seed": 3},
  "optimizer": {"kind": "sgd_momentum", "learning_rate": 0.05},
  "training": {"epochs": 20, "batch_size": 100, "eval_every": 10},
  "protocol": {"kind": "scratch"},
  "seeds": [1, 2],
  "points": 21
}
)";
  }

  const std::string bin = PATHLINE_BIN;
  for (const char* leg : {"a", "b"}) {
    const std::string cmd = bin + " protocol --config " + cfg_path.string() +
                            " --out " + (root / leg).string() + " > " +
                            (root / (std::string(leg) + ".log")).string() +
                            " 2>&1";
    const int rc = std::system(cmd.c_str());
    ck.expect_eq(rc, 0, std::string("protocol run ") + leg + " exits cleanly");
  }

  int compared = 0, mismatched = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    // The config echo names its output directory, which legitimately differs
    // between the two trees; everything else must match bitwise.
    if (rel.filename() == "config.json") continue;
    const fs::path twin = root / "b" / rel;
    ck.expect(fs::exists(twin), "rerun produced " + rel.string());
    if (!fs::exists(twin)) continue;
    ++compared;
    if (read_file(entry.path()) != read_file(twin)) {
      ++mismatched;
      ck.expect(false, "bitwise mismatch in " + rel.string());
    }
  }
  ck.expect(compared > 0, "rerun comparison saw at least one file");
  ck.expect_eq(mismatched, 0, "files differing between identical reruns");
  if (mismatched == 0) fs::remove_all(root, ec);
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  std::string name;
  std::function<void(Checker&, SharedRuns&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  bool list_only = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--list") {
      list_only = true;
    } else if (arg == "--criterion" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) wanted.push_back(std::atoi(tok.c_str()));
    } else {
      std::fprintf(stderr,
                   "usage: %s [--list] [--criterion N[,M...]] ...\n", argv[0]);
      return 2;
    }
  }

  SharedRuns shared;
  const std::vector<Criterion> all = {
      {1, "gradients vs central differences",
       [](Checker& ck, SharedRuns&) { criterion_gradients(ck); }},
      {2, "interpolation endpoint and composition exactness",
       [](Checker& ck, SharedRuns&) { criterion_interpolation(ck); }},
      {3, "shape classifier vs set-definition oracle",
       [](Checker& ck, SharedRuns&) { criterion_classifier(ck); }},
      {4, "spiral barrier sweep vs easy-blobs control",
       [](Checker& ck, SharedRuns& sh) { criterion_spiral_barrier(ck, sh); }},
      {5, "width plans and the fate of the barrier",
       [](Checker& ck, SharedRuns&) { criterion_width_plans(ck); }},
      {6, "summit restarts",
       [](Checker& ck, SharedRuns& sh) { criterion_summit_restart(ck, sh); }},
      {7, "memorized-labels initialization",
       [](Checker& ck, SharedRuns&) { criterion_adversarial(ck); }},
      {8, "per-group learning rates",
       [](Checker& ck, SharedRuns&) { criterion_per_group(ck); }},
      {9, "relative distance measure",
       [](Checker& ck, SharedRuns&) { criterion_distance(ck); }},
      {10, "bitwise identical reruns",
       [](Checker& ck, SharedRuns&) { criterion_determinism(ck); }},
  };

  if (list_only) {
    for (const auto& c : all)
      std::printf("%2d  %s\n", c.id, c.name.c_str());
    return 0;
  }

  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), c.id) == wanted.end())
      continue;
    ++ran;
    Checker ck;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(ck, shared);
    } catch (const std::exception& e) {
      ck.expect(false, std::string("threw: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (ck.failures.empty()) {
      std::printf("[PASS] criterion %2d: %s (%.1f s)\n", c.id, c.name.c_str(),
                  secs);
    } else {
      ++failed;
      std::printf("[FAIL] criterion %2d: %s (%.1f s)\n", c.id, c.name.c_str(),
                  secs);
      for (const auto& f : ck.failures)
        std::printf("       - %s\n", f.c_str());
    }
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no matching criteria\n");
    return 2;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
