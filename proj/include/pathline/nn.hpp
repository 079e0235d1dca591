#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "pathline/common.hpp"

namespace pathline {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { ReLU };
enum class LossKind { BinaryCrossEntropy, SoftmaxCrossEntropy };

std::string to_string(Activation a);
std::string to_string(LossKind l);
Activation activation_from_string(const std::string& s);
LossKind loss_from_string(const std::string& s);

// Architecture description for a dense feed-forward network. A spec with H
// hidden widths has H+1 weight layers; layer l maps widths[l] -> widths[l+1]
// where widths = [input, hidden..., output].
struct ModelSpec {
  int input_dim = 0;
  std::vector<int> hidden_widths;
  int output_dim = 0;
  Activation activation = Activation::ReLU;
  LossKind loss = LossKind::BinaryCrossEntropy;

  int layer_count() const { return static_cast<int>(hidden_widths.size()) + 1; }
  std::vector<int> widths() const;
  int num_classes() const {
    return loss == LossKind::BinaryCrossEntropy ? 2 : output_dim;
  }

  // Throws std::invalid_argument on a malformed spec.
  void validate() const;

  // Digest over all fields; identical specs hash identically.
  std::uint64_t hash() const;
};

enum class ParamKind { Weight, Bias };

std::string to_string(ParamKind k);

// One named parameter array. Weights are rows x cols (fan_out x fan_in),
// biases rows x 1. Values are stored row-major.
struct ParamEntry {
  int layer = 0;
  ParamKind kind = ParamKind::Weight;
  int rows = 0;
  int cols = 1;
  std::vector<double> values;

  Eigen::Map<const RowMat> matrix() const {
    return Eigen::Map<const RowMat>(values.data(), rows, cols);
  }
  Eigen::Map<RowMat> matrix() {
    return Eigen::Map<RowMat>(values.data(), rows, cols);
  }
  Eigen::Map<const Eigen::VectorXd> vector() const {
    return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                             static_cast<Eigen::Index>(values.size()));
  }
  Eigen::Map<Eigen::VectorXd> vector() {
    return Eigen::Map<Eigen::VectorXd>(values.data(),
                                       static_cast<Eigen::Index>(values.size()));
  }
};

// All trainable parameters of a model, ordered (layer 0 weight, layer 0 bias,
// layer 1 weight, ...). Two states are interpolation-compatible iff their
// spec_hash matches.
struct ParamState {
  std::vector<ParamEntry> entries;
  std::uint64_t spec_hash = 0;

  std::size_t scalar_count() const;
  // Digest over layout and raw values; equal iff states are bitwise equal.
  std::uint64_t digest() const;
  bool all_finite() const;

  // Zero-filled state with the same layout.
  ParamState zeros_like() const;
};

// Gradients of the mean-batch loss, layout-identical to the ParamState they
// were taken at.
using GradState = ParamState;

// Addresses a subset of parameter entries: whole layers or named groups
// ("weight" / "bias").
struct LayerSelector {
  enum class Mode { All, Layers, Groups };
  Mode mode = Mode::All;
  std::set<int> layers;
  std::set<std::string> groups;

  static LayerSelector all();
  static LayerSelector of_layers(std::set<int> layers);
  static LayerSelector of_groups(std::set<std::string> groups);

  bool operator==(const LayerSelector&) const = default;

  // "all", "layers:0,2", "groups:bias".
  std::string to_string() const;
  static LayerSelector parse(const std::string& text);

  // Whether this selector addresses the (layer, kind) entry.
  bool selects(int layer, ParamKind kind) const;

  // Throws if a referenced layer index or group name does not exist.
  void validate(const ModelSpec& spec) const;
};

// Disjoint, exhaustive partition of entry indices into selected entries and
// their complement.
struct SelectionSplit {
  std::vector<std::size_t> selected;
  std::vector<std::size_t> complement;
};

SelectionSplit select(const ParamState& params, const LayerSelector& sel);

// Deterministic initialization: weights uniform on
// [-sqrt(3/fan_in), +sqrt(3/fan_in)], biases zero.
ParamState init_params(const ModelSpec& spec, std::uint64_t seed);

struct ForwardResult {
  Eigen::MatrixXd logits;  // batch x output_dim
  double loss = 0.0;
  double accuracy = 0.0;
};

// Mean loss and accuracy over the batch. Labels are class indices: {0,1} for
// binary cross entropy, [0, output_dim) for softmax cross entropy.
ForwardResult forward(const ModelSpec& spec, const ParamState& params,
                      const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                      const std::vector<int>& labels);

struct BackwardResult {
  GradState grad;
  double loss = 0.0;
  double accuracy = 0.0;
};

// Exact reverse-mode gradient of the mean-batch loss. The ReLU subgradient at
// exactly zero is taken as zero.
BackwardResult backward(const ModelSpec& spec, const ParamState& params,
                        const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                        const std::vector<int>& labels);

// Building blocks for evaluating many states that share a layer prefix (the
// arithmetic is identical to forward, so cached prefixes stay bitwise
// consistent with full passes).
//
// forward_prefix: activations entering layer `stop_layer` (stop_layer = 0
// returns the inputs unchanged).
Eigen::MatrixXd forward_prefix(const ModelSpec& spec, const ParamState& params,
                               int stop_layer,
                               const Eigen::Ref<const Eigen::MatrixXd>& inputs);
// forward_suffix: logits from activations entering layer `start_layer`.
Eigen::MatrixXd forward_suffix(const ModelSpec& spec, const ParamState& params,
                               int start_layer,
                               const Eigen::Ref<const Eigen::MatrixXd>& activations);
// Mean loss and accuracy of precomputed logits.
struct LogitMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};
LogitMetrics logit_metrics(const ModelSpec& spec, const Eigen::MatrixXd& logits,
                           const std::vector<int>& labels);

}  // namespace pathline
