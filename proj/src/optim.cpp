#include "pathline/optim.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pathline {

std::string to_string(OptimKind k) {
  return k == OptimKind::SgdMomentum ? "sgd_momentum" : "adam";
}

OptimKind optim_kind_from_string(const std::string& s) {
  if (s == "sgd_momentum") return OptimKind::SgdMomentum;
  if (s == "adam") return OptimKind::Adam;
  throw std::invalid_argument("unknown optimizer kind: " + s);
}

double lr_at(const std::vector<ScheduleEntry>& schedule, double base_lr, int epoch) {
  double lr = base_lr;
  for (const auto& entry : schedule)
    if (entry.epoch <= epoch) lr *= entry.multiplier;
  return lr;
}

void OptimConfig::validate(const ModelSpec& spec) const {
  if (!(base_lr > 0.0) || !std::isfinite(base_lr))
    throw std::invalid_argument("optim: base_lr must be > 0");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw std::invalid_argument("optim: weight_decay must be >= 0");
  if (kind == OptimKind::SgdMomentum) {
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw std::invalid_argument("optim: momentum must lie in [0, 1)");
  } else {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw std::invalid_argument("optim: betas must lie in [0, 1)");
    if (!(epsilon > 0.0))
      throw std::invalid_argument("optim: epsilon must be > 0");
  }
  int last_epoch = -1;
  for (const auto& entry : schedule) {
    if (entry.epoch <= last_epoch)
      throw std::invalid_argument("optim: schedule epochs must be strictly increasing");
    if (!(entry.multiplier > 0.0))
      throw std::invalid_argument("optim: schedule multipliers must be > 0");
    last_epoch = entry.epoch;
  }
  for (const auto& o : group_overrides) {
    o.selector.validate(spec);
    if (o.lr && (!(*o.lr > 0.0) || !std::isfinite(*o.lr)))
      throw std::invalid_argument("optim: override lr must be > 0");
    if (o.weight_decay && (!(*o.weight_decay >= 0.0) || !std::isfinite(*o.weight_decay)))
      throw std::invalid_argument("optim: override weight_decay must be >= 0");
  }
  // Overridden selectors must be pairwise disjoint over the spec's entries.
  for (int l = 0; l < spec.layer_count(); ++l) {
    for (ParamKind kind : {ParamKind::Weight, ParamKind::Bias}) {
      int owners = 0;
      for (const auto& o : group_overrides)
        if (o.selector.selects(l, kind)) ++owners;
      if (owners > 1)
        throw std::invalid_argument(
            "optim: overlapping group overrides at layer " + std::to_string(l) +
            " " + pathline::to_string(kind));
    }
  }
}

std::vector<OptimConfig::EntryHyper> OptimConfig::resolve_entries(
    const ModelSpec& spec) const {
  std::vector<EntryHyper> out;
  out.reserve(static_cast<std::size_t>(2 * spec.layer_count()));
  for (int l = 0; l < spec.layer_count(); ++l) {
    for (ParamKind kind : {ParamKind::Weight, ParamKind::Bias}) {
      EntryHyper h{base_lr, weight_decay};
      for (const auto& o : group_overrides) {
        if (!o.selector.selects(l, kind)) continue;
        if (o.lr) h.base_lr = *o.lr;
        if (o.weight_decay) h.weight_decay = *o.weight_decay;
        break;  // overrides are disjoint
      }
      out.push_back(h);
    }
  }
  return out;
}

OptimState OptimState::zeros_for(const ParamState& params) {
  OptimState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  s.step = 0;
  return s;
}

namespace {

void check_layout(const ParamState& params, const GradState& grads,
                  const OptimState& state) {
  if (grads.entries.size() != params.entries.size() ||
      state.m.entries.size() != params.entries.size())
    throw std::invalid_argument("optimizer: state layouts do not match");
  if (!grads.all_finite())
    throw std::invalid_argument("optimizer: non-finite gradient");
}

}  // namespace

void apply_sgd(ParamEntry& p, const ParamEntry& g, ParamEntry& vel, double lr,
               double mu, double lambda) {
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double grad = g.values[i] + lambda * p.values[i];
    vel.values[i] = mu * vel.values[i] + grad;
    p.values[i] -= lr * vel.values[i];
  }
}

void apply_adam(ParamEntry& p, const ParamEntry& g, ParamEntry& m, ParamEntry& v,
                std::int64_t step, double lr, double beta1, double beta2,
                double eps, double lambda) {
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double grad = g.values[i] + lambda * p.values[i];
    m.values[i] = beta1 * m.values[i] + (1.0 - beta1) * grad;
    v.values[i] = beta2 * v.values[i] + (1.0 - beta2) * grad * grad;
    const double mhat = m.values[i] / bc1;
    const double vhat = v.values[i] / bc2;
    p.values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void sgd_momentum_step(ParamState& params, const GradState& grads, OptimState& state,
                       double lr, double mu, double lambda) {
  check_layout(params, grads, state);
  for (std::size_t e = 0; e < params.entries.size(); ++e)
    apply_sgd(params.entries[e], grads.entries[e], state.m.entries[e], lr, mu,
              lambda);
}

void adam_step(ParamState& params, const GradState& grads, OptimState& state,
               double lr, double beta1, double beta2, double eps, double lambda) {
  check_layout(params, grads, state);
  ++state.step;
  for (std::size_t e = 0; e < params.entries.size(); ++e)
    apply_adam(params.entries[e], grads.entries[e], state.m.entries[e],
               state.v.entries[e], state.step, lr, beta1, beta2, eps, lambda);
}

void TrainConfig::validate(std::size_t n_train) const {
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (static_cast<std::size_t>(batch_size) > n_train)
    throw std::invalid_argument("train: batch_size " + std::to_string(batch_size) +
                                " exceeds train split size " + std::to_string(n_train));
  if (eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
  if (stop_train_accuracy &&
      !(*stop_train_accuracy > 0.0 && *stop_train_accuracy <= 1.0))
    throw std::invalid_argument("train: stop_train_accuracy must lie in (0, 1]");
  int last = -1;
  for (int c : checkpoint_epochs) {
    if (c < 0 || c > epochs)
      throw std::invalid_argument("train: checkpoint epoch " + std::to_string(c) +
                                  " outside [0, epochs]");
    if (c <= last)
      throw std::invalid_argument("train: checkpoint epochs must be strictly increasing");
    last = c;
  }
  augment.validate();
}

RunRecord train(const ModelSpec& spec, const ParamState& init, const Dataset& data,
                const OptimConfig& optim, const TrainConfig& tc) {
  spec.validate();
  data.validate();
  optim.validate(spec);
  tc.validate(data.n_train);
  if (init.spec_hash != spec.hash())
    throw std::invalid_argument("train: init params do not match the model spec");
  if (data.dim() != spec.input_dim)
    throw std::invalid_argument("train: dataset width " + std::to_string(data.dim()) +
                                " does not match input_dim " +
                                std::to_string(spec.input_dim));
  if (data.num_classes != spec.num_classes())
    throw std::invalid_argument("train: dataset classes do not match the loss kind");

  RunRecord rec;
  rec.spec = spec;
  rec.init_params = init;
  rec.init_digest = init.digest();

  ParamState params = init;
  OptimState state = OptimState::zeros_for(params);
  const auto hyper = optim.resolve_entries(spec);

  const Eigen::Ref<const Eigen::MatrixXd> train_x = data.train_features();
  const std::vector<int> train_y = data.train_labels();
  const Eigen::Ref<const Eigen::MatrixXd> test_x = data.test_features();
  const std::vector<int> test_y = data.test_labels();

  const auto evaluate = [&](int epochs_done) {
    EvalMetrics ev;
    ev.epochs_done = epochs_done;
    const ForwardResult tr = forward(spec, params, train_x, train_y);
    ev.train_loss = tr.loss;
    ev.train_accuracy = tr.accuracy;
    const ForwardResult te = forward(spec, params, test_x, test_y);
    ev.test_loss = te.loss;
    ev.test_accuracy = te.accuracy;
    rec.evals.push_back(ev);
  };
  const auto checkpoint_if_due = [&](int epochs_done) {
    for (int c : tc.checkpoint_epochs)
      if (c == epochs_done) rec.checkpoints.push_back({epochs_done, params});
  };

  evaluate(0);
  checkpoint_if_due(0);

  const std::size_t n = data.n_train;
  std::vector<std::size_t> order(n);
  Eigen::MatrixXd batch_x;
  std::vector<int> batch_y;

  for (int epoch = 0; epoch < tc.epochs && !rec.failed; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    RngStream shuffle_stream(derive_seed(tc.shuffle_seed, "shuffle",
                                         static_cast<std::uint64_t>(epoch)));
    shuffle_stream.shuffle(order);
    RngStream augment_stream(derive_seed(tc.shuffle_seed, "augment",
                                         static_cast<std::uint64_t>(epoch)));

    const double mult = lr_at(optim.schedule, 1.0, epoch);
    double loss_sum = 0.0;
    double acc_sum = 0.0;

    for (std::size_t start = 0; start < n && !rec.failed;
         start += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t rows =
          std::min(static_cast<std::size_t>(tc.batch_size), n - start);
      batch_x.resize(static_cast<Eigen::Index>(rows), data.dim());
      batch_y.resize(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        batch_x.row(static_cast<Eigen::Index>(r)) =
            train_x.row(static_cast<Eigen::Index>(order[start + r]));
        batch_y[r] = train_y[order[start + r]];
      }
      if (tc.augment.kind != AugmentSpec::Kind::None)
        batch_x = augment(batch_x, tc.augment, augment_stream);

      const BackwardResult br = backward(spec, params, batch_x, batch_y);
      if (!std::isfinite(br.loss)) {
        rec.failed = true;
        rec.failure = "non-finite training loss at epoch " + std::to_string(epoch) +
                      ", batch starting at row " + std::to_string(start);
        break;
      }
      loss_sum += br.loss * static_cast<double>(rows);
      acc_sum += br.accuracy * static_cast<double>(rows);

      if (optim.kind == OptimKind::SgdMomentum) {
        for (std::size_t e = 0; e < params.entries.size(); ++e)
          apply_sgd(params.entries[e], br.grad.entries[e], state.m.entries[e],
                    hyper[e].base_lr * mult, optim.momentum, hyper[e].weight_decay);
      } else {
        ++state.step;
        for (std::size_t e = 0; e < params.entries.size(); ++e)
          apply_adam(params.entries[e], br.grad.entries[e], state.m.entries[e],
                     state.v.entries[e], state.step, hyper[e].base_lr * mult,
                     optim.beta1, optim.beta2, optim.epsilon,
                     hyper[e].weight_decay);
      }
    }

    if (rec.failed) break;
    rec.epochs.push_back({epoch, loss_sum / static_cast<double>(n),
                          acc_sum / static_cast<double>(n)});
    const int done = epoch + 1;
    bool evaluated = false;
    const auto ensure_eval = [&] {
      if (!evaluated) evaluate(done);
      evaluated = true;
    };
    bool stop_now = false;
    if (tc.stop_train_accuracy &&
        rec.epochs.back().train_accuracy >= *tc.stop_train_accuracy) {
      ensure_eval();
      stop_now = rec.evals.back().train_accuracy >= *tc.stop_train_accuracy;
    }
    if (done % tc.eval_every == 0 || done == tc.epochs) ensure_eval();
    checkpoint_if_due(done);
    if (stop_now) break;
  }

  rec.final_params = std::move(params);
  rec.final_digest = rec.final_params.digest();
  return rec;
}

}  // namespace pathline
