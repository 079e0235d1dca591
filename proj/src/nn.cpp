#include "pathline/nn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pathline {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
  }
  throw std::logic_error("unknown activation");
}

std::string to_string(LossKind l) {
  switch (l) {
    case LossKind::BinaryCrossEntropy: return "bce";
    case LossKind::SoftmaxCrossEntropy: return "softmax_ce";
  }
  throw std::logic_error("unknown loss");
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  throw std::invalid_argument("unknown activation: " + s);
}

LossKind loss_from_string(const std::string& s) {
  if (s == "bce") return LossKind::BinaryCrossEntropy;
  if (s == "softmax_ce") return LossKind::SoftmaxCrossEntropy;
  throw std::invalid_argument("unknown loss: " + s);
}

std::string to_string(ParamKind k) {
  return k == ParamKind::Weight ? "weight" : "bias";
}

std::vector<int> ModelSpec::widths() const {
  std::vector<int> w;
  w.reserve(hidden_widths.size() + 2);
  w.push_back(input_dim);
  w.insert(w.end(), hidden_widths.begin(), hidden_widths.end());
  w.push_back(output_dim);
  return w;
}

void ModelSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("model: input_dim must be >= 1");
  if (output_dim < 1) throw std::invalid_argument("model: output_dim must be >= 1");
  if (hidden_widths.empty())
    throw std::invalid_argument("model: hidden_widths must be non-empty");
  for (int w : hidden_widths)
    if (w < 1) throw std::invalid_argument("model: hidden widths must be >= 1");
  if (loss == LossKind::BinaryCrossEntropy && output_dim != 1)
    throw std::invalid_argument("model: bce loss requires output_dim = 1");
  if (loss == LossKind::SoftmaxCrossEntropy && output_dim < 2)
    throw std::invalid_argument("model: softmax_ce loss requires output_dim >= 2");
}

std::uint64_t ModelSpec::hash() const {
  Fnv1a h;
  h.update("model-spec-v1");
  h.update_i64(input_dim);
  h.update_i64(static_cast<std::int64_t>(hidden_widths.size()));
  for (int w : hidden_widths) h.update_i64(w);
  h.update_i64(output_dim);
  h.update(to_string(activation));
  h.update(to_string(loss));
  return h.value();
}

std::size_t ParamState::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.values.size();
  return n;
}

std::uint64_t ParamState::digest() const {
  Fnv1a h;
  h.update("param-state-v1");
  h.update_u64(spec_hash);
  for (const auto& e : entries) {
    h.update_i64(e.layer);
    h.update(to_string(e.kind));
    h.update_i64(e.rows);
    h.update_i64(e.cols);
    h.update_doubles(e.values);
  }
  return h.value();
}

bool ParamState::all_finite() const {
  for (const auto& e : entries)
    for (double v : e.values)
      if (!std::isfinite(v)) return false;
  return true;
}

ParamState ParamState::zeros_like() const {
  ParamState z;
  z.spec_hash = spec_hash;
  z.entries.reserve(entries.size());
  for (const auto& e : entries) {
    ParamEntry ze = e;
    std::fill(ze.values.begin(), ze.values.end(), 0.0);
    z.entries.push_back(std::move(ze));
  }
  return z;
}

LayerSelector LayerSelector::all() { return LayerSelector{}; }

LayerSelector LayerSelector::of_layers(std::set<int> layers) {
  LayerSelector s;
  s.mode = Mode::Layers;
  s.layers = std::move(layers);
  return s;
}

LayerSelector LayerSelector::of_groups(std::set<std::string> groups) {
  LayerSelector s;
  s.mode = Mode::Groups;
  s.groups = std::move(groups);
  return s;
}

std::string LayerSelector::to_string() const {
  switch (mode) {
    case Mode::All: return "all";
    case Mode::Layers: {
      std::ostringstream os;
      os << "layers:";
      bool first = true;
      for (int l : layers) {
        if (!first) os << ",";
        os << l;
        first = false;
      }
      return os.str();
    }
    case Mode::Groups: {
      std::ostringstream os;
      os << "groups:";
      bool first = true;
      for (const auto& g : groups) {
        if (!first) os << ",";
        os << g;
        first = false;
      }
      return os.str();
    }
  }
  throw std::logic_error("unknown selector mode");
}

LayerSelector LayerSelector::parse(const std::string& text) {
  if (text == "all") return all();
  auto split_list = [](const std::string& body) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : body) {
      if (c == ',') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    parts.push_back(cur);
    return parts;
  };
  if (text.rfind("layers:", 0) == 0) {
    std::set<int> layers;
    for (const auto& p : split_list(text.substr(7))) {
      if (p.empty()) throw std::invalid_argument("selector: empty layer index in '" + text + "'");
      std::size_t pos = 0;
      const int v = std::stoi(p, &pos);
      if (pos != p.size() || v < 0)
        throw std::invalid_argument("selector: bad layer index '" + p + "'");
      layers.insert(v);
    }
    return of_layers(std::move(layers));
  }
  if (text.rfind("groups:", 0) == 0) {
    std::set<std::string> groups;
    for (const auto& p : split_list(text.substr(7))) {
      if (p != "weight" && p != "bias")
        throw std::invalid_argument("selector: unknown group '" + p + "'");
      groups.insert(p);
    }
    return of_groups(std::move(groups));
  }
  throw std::invalid_argument("selector: cannot parse '" + text + "'");
}

bool LayerSelector::selects(int layer, ParamKind kind) const {
  switch (mode) {
    case Mode::All: return true;
    case Mode::Layers: return layers.count(layer) > 0;
    case Mode::Groups: return groups.count(pathline::to_string(kind)) > 0;
  }
  throw std::logic_error("unknown selector mode");
}

void LayerSelector::validate(const ModelSpec& spec) const {
  if (mode == Mode::Layers) {
    for (int l : layers)
      if (l < 0 || l >= spec.layer_count())
        throw std::invalid_argument("selector: layer index " + std::to_string(l) +
                                    " out of range for a " +
                                    std::to_string(spec.layer_count()) +
                                    "-layer model");
  }
  if (mode == Mode::Groups && groups.empty())
    throw std::invalid_argument("selector: empty group set");
}

SelectionSplit select(const ParamState& params, const LayerSelector& sel) {
  int max_layer = -1;
  for (const auto& e : params.entries) max_layer = std::max(max_layer, e.layer);
  if (sel.mode == LayerSelector::Mode::Layers) {
    for (int l : sel.layers)
      if (l < 0 || l > max_layer)
        throw std::invalid_argument("select: unknown layer index " + std::to_string(l));
  }
  if (sel.mode == LayerSelector::Mode::Groups) {
    for (const auto& g : sel.groups)
      if (g != "weight" && g != "bias")
        throw std::invalid_argument("select: unknown group '" + g + "'");
  }

  SelectionSplit out;
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    const auto& e = params.entries[i];
    (sel.selects(e.layer, e.kind) ? out.selected : out.complement).push_back(i);
  }
  return out;
}

ParamState init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto widths = spec.widths();
  ParamState state;
  state.spec_hash = spec.hash();
  for (int l = 0; l < spec.layer_count(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));

    ParamEntry w;
    w.layer = l;
    w.kind = ParamKind::Weight;
    w.rows = fan_out;
    w.cols = fan_in;
    w.values.resize(static_cast<std::size_t>(fan_out) * fan_in);
    RngStream stream(derive_seed(seed, "init", static_cast<std::uint64_t>(l)));
    for (double& v : w.values) v = stream.uniform(-bound, bound);
    state.entries.push_back(std::move(w));

    ParamEntry b;
    b.layer = l;
    b.kind = ParamKind::Bias;
    b.rows = fan_out;
    b.cols = 1;
    b.values.assign(static_cast<std::size_t>(fan_out), 0.0);
    state.entries.push_back(std::move(b));
  }
  return state;
}

namespace {

struct LayerViews {
  std::vector<Eigen::Map<const RowMat>> weights;
  std::vector<Eigen::Map<const Eigen::VectorXd>> biases;
};

LayerViews make_views(const ModelSpec& spec, const ParamState& params) {
  if (params.spec_hash != spec.hash())
    throw std::invalid_argument("params were built for a different model spec");
  const auto widths = spec.widths();
  const int layers = spec.layer_count();
  if (params.entries.size() != static_cast<std::size_t>(2 * layers))
    throw std::invalid_argument("param state entry count does not match spec");
  LayerViews v;
  for (int l = 0; l < layers; ++l) {
    const auto& w = params.entries[2 * l];
    const auto& b = params.entries[2 * l + 1];
    if (w.kind != ParamKind::Weight || b.kind != ParamKind::Bias ||
        w.layer != l || b.layer != l)
      throw std::invalid_argument("param state entries out of order at layer " +
                                  std::to_string(l));
    if (w.rows != widths[l + 1] || w.cols != widths[l])
      throw std::invalid_argument(
          "layer " + std::to_string(l) + " weight shape " + std::to_string(w.rows) +
          "x" + std::to_string(w.cols) + " does not match spec " +
          std::to_string(widths[l + 1]) + "x" + std::to_string(widths[l]));
    if (b.rows != widths[l + 1])
      throw std::invalid_argument("layer " + std::to_string(l) + " bias length " +
                                  std::to_string(b.rows) + " does not match spec " +
                                  std::to_string(widths[l + 1]));
    v.weights.push_back(w.matrix());
    v.biases.push_back(b.vector());
  }
  return v;
}

void check_batch(const ModelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& x,
                 const std::vector<int>& y) {
  if (x.cols() != spec.input_dim)
    throw std::invalid_argument("batch feature width " + std::to_string(x.cols()) +
                                " does not match input layer width " +
                                std::to_string(spec.input_dim));
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw std::invalid_argument("batch has " + std::to_string(x.rows()) +
                                " rows but " + std::to_string(y.size()) + " labels");
  if (x.rows() == 0) throw std::invalid_argument("empty batch");
  const int classes = spec.num_classes();
  for (int v : y)
    if (v < 0 || v >= classes)
      throw std::invalid_argument("label " + std::to_string(v) +
                                  " out of range for " + std::to_string(classes) +
                                  " classes");
}

// Activations per layer; acts[0] is the input batch, acts[l+1] the output of
// layer l (post-ReLU for hidden layers, raw logits for the last).
std::vector<Eigen::MatrixXd> run_forward(const LayerViews& v,
                                         const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const int layers = static_cast<int>(v.weights.size());
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers + 1);
  acts.emplace_back(x);
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = acts.back() * v.weights[l].transpose();
    z.rowwise() += v.biases[l].transpose();
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

double stable_softplus(double z) {
  // log(1 + e^z) without overflow.
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// Mean loss and accuracy from logits; also writes dL/dlogits (already divided
// by the batch size) when grad is non-null.
void loss_and_grad(const ModelSpec& spec, const Eigen::MatrixXd& logits,
                   const std::vector<int>& y, double* loss, double* accuracy,
                   Eigen::MatrixXd* grad) {
  const Eigen::Index n = logits.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  if (grad) grad->resize(logits.rows(), logits.cols());

  if (spec.loss == LossKind::BinaryCrossEntropy) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = logits(i, 0);
      const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
      loss_sum += stable_softplus(z) - z * yi;
      if ((z > 0.0 ? 1 : 0) == y[static_cast<std::size_t>(i)]) ++correct;
      if (grad) {
        const double sig = 1.0 / (1.0 + std::exp(-z));
        (*grad)(i, 0) = (sig - yi) * inv_n;
      }
    }
  } else {
    const Eigen::Index c = logits.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index argmax = 0;
      double zmax = logits(i, 0);
      for (Eigen::Index j = 1; j < c; ++j)
        if (logits(i, j) > zmax) {
          zmax = logits(i, j);
          argmax = j;
        }
      double sum = 0.0;
      for (Eigen::Index j = 0; j < c; ++j) sum += std::exp(logits(i, j) - zmax);
      const double lse = zmax + std::log(sum);
      const int yi = y[static_cast<std::size_t>(i)];
      loss_sum += lse - logits(i, yi);
      if (argmax == yi) ++correct;
      if (grad) {
        for (Eigen::Index j = 0; j < c; ++j)
          (*grad)(i, j) = std::exp(logits(i, j) - lse) * inv_n;
        (*grad)(i, yi) -= inv_n;
      }
    }
  }
  *loss = loss_sum * inv_n;
  *accuracy = static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace

Eigen::MatrixXd forward_prefix(const ModelSpec& spec, const ParamState& params,
                               int stop_layer,
                               const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  const auto views = make_views(spec, params);
  if (stop_layer < 0 || stop_layer > spec.layer_count())
    throw std::invalid_argument("forward_prefix: layer index out of range");
  if (inputs.cols() != spec.input_dim)
    throw std::invalid_argument("batch feature width " + std::to_string(inputs.cols()) +
                                " does not match input layer width " +
                                std::to_string(spec.input_dim));
  Eigen::MatrixXd act = inputs;
  const int layers = spec.layer_count();
  for (int l = 0; l < stop_layer; ++l) {
    Eigen::MatrixXd z = act * views.weights[l].transpose();
    z.rowwise() += views.biases[l].transpose();
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    act = std::move(z);
  }
  return act;
}

Eigen::MatrixXd forward_suffix(const ModelSpec& spec, const ParamState& params,
                               int start_layer,
                               const Eigen::Ref<const Eigen::MatrixXd>& activations) {
  const auto views = make_views(spec, params);
  const int layers = spec.layer_count();
  if (start_layer < 0 || start_layer > layers)
    throw std::invalid_argument("forward_suffix: layer index out of range");
  const auto widths = spec.widths();
  if (activations.cols() != widths[static_cast<std::size_t>(start_layer)])
    throw std::invalid_argument(
        "forward_suffix: activation width " + std::to_string(activations.cols()) +
        " does not match layer " + std::to_string(start_layer) + " input width " +
        std::to_string(widths[static_cast<std::size_t>(start_layer)]));
  Eigen::MatrixXd act = activations;
  for (int l = start_layer; l < layers; ++l) {
    Eigen::MatrixXd z = act * views.weights[l].transpose();
    z.rowwise() += views.biases[l].transpose();
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    act = std::move(z);
  }
  return act;
}

LogitMetrics logit_metrics(const ModelSpec& spec, const Eigen::MatrixXd& logits,
                           const std::vector<int>& labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size() || logits.rows() == 0)
    throw std::invalid_argument("logit_metrics: batch/label size mismatch");
  LogitMetrics m;
  loss_and_grad(spec, logits, labels, &m.loss, &m.accuracy, nullptr);
  return m;
}

ForwardResult forward(const ModelSpec& spec, const ParamState& params,
                      const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                      const std::vector<int>& labels) {
  check_batch(spec, inputs, labels);
  ForwardResult r;
  r.logits = forward_suffix(spec, params, 0, inputs);
  loss_and_grad(spec, r.logits, labels, &r.loss, &r.accuracy, nullptr);
  return r;
}

BackwardResult backward(const ModelSpec& spec, const ParamState& params,
                        const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                        const std::vector<int>& labels) {
  const auto views = make_views(spec, params);
  check_batch(spec, inputs, labels);
  const auto acts = run_forward(views, inputs);
  const int layers = spec.layer_count();

  BackwardResult out;
  out.grad = params.zeros_like();

  Eigen::MatrixXd delta;  // dL/dz for the current layer
  loss_and_grad(spec, acts.back(), labels, &out.loss, &out.accuracy, &delta);

  for (int l = layers - 1; l >= 0; --l) {
    auto& gw = out.grad.entries[2 * l];
    auto& gb = out.grad.entries[2 * l + 1];
    gw.matrix().noalias() = delta.transpose() * acts[l];
    gb.vector() = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd prev = delta * views.weights[l];
      // acts[l] is post-ReLU; a zero output means the unit was clamped (or
      // exactly zero pre-activation, where the subgradient is defined as 0).
      delta = ((acts[l].array() > 0.0).cast<double>() * prev.array()).matrix();
    }
  }
  return out;
}

}  // namespace pathline
