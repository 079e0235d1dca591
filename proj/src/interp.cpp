#include "pathline/interp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pathline {

void ShapeTolerances::validate() const {
  const auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(rise_tol) || !in_unit(plateau_tol) || !in_unit(plateau_span))
    throw std::invalid_argument("shape tolerances must lie in (0, 1)");
}

std::string to_string(ShapeTag t) {
  switch (t) {
    case ShapeTag::NoBarrier: return "no_barrier";
    case ShapeTag::Barrier: return "barrier";
    case ShapeTag::Plateau: return "plateau";
  }
  throw std::logic_error("unknown shape tag");
}

ShapeTag shape_tag_from_string(const std::string& s) {
  if (s == "no_barrier") return ShapeTag::NoBarrier;
  if (s == "barrier") return ShapeTag::Barrier;
  if (s == "plateau") return ShapeTag::Plateau;
  throw std::invalid_argument("unknown shape tag: " + s);
}

std::string PathShape::describe() const {
  std::ostringstream os;
  switch (tag) {
    case ShapeTag::NoBarrier:
      os << "no_barrier";
      break;
    case ShapeTag::Barrier:
      os << "barrier(summit=" << format_double(summit_alpha)
         << ",height=" << format_double(height) << ")";
      break;
    case ShapeTag::Plateau:
      os << "plateau(drop=" << format_double(drop_alpha) << ")";
      break;
  }
  return os.str();
}

void InterpPath::validate() const {
  const std::size_t k = alphas.size();
  if (k < 3) throw std::invalid_argument("path: need at least 3 grid points");
  if (losses.size() != k || accuracies.size() != k)
    throw std::invalid_argument("path: column lengths differ");
  if (alphas.front() != 0.0 || alphas.back() != 1.0)
    throw std::invalid_argument("path: grid must span [0, 1] exactly");
  for (std::size_t i = 1; i < k; ++i)
    if (!(alphas[i] > alphas[i - 1]))
      throw std::invalid_argument("path: alphas must be strictly increasing");
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::isfinite(losses[i]) || losses[i] < 0.0)
      throw std::invalid_argument("path: losses must be finite and >= 0");
    if (!(accuracies[i] >= 0.0 && accuracies[i] <= 1.0))
      throw std::invalid_argument("path: accuracies must lie in [0, 1]");
  }
}

namespace {

void check_compatible(const ParamState& a, const ParamState& b) {
  if (a.spec_hash != b.spec_hash)
    throw std::invalid_argument(
        "interpolate: endpoint states were built for different model specs");
  if (a.entries.size() != b.entries.size())
    throw std::invalid_argument("interpolate: endpoint layouts differ");
}

// Affine combination u*a + v*b written so that swapping (a,u) <-> (b,v) is
// bitwise symmetric (addition commutes; each product is formed the same way).
void mix_entry(const ParamEntry& a, const ParamEntry& b, double u, double v,
               ParamEntry& out) {
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = u * a.values[i] + v * b.values[i];
}

}  // namespace

ParamState interpolate(const ParamState& init_state, const ParamState& final_state,
                       double alpha) {
  check_compatible(init_state, final_state);
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("interpolate: alpha must lie in [0, 1]");
  if (alpha == 0.0) return init_state;
  if (alpha == 1.0) return final_state;
  ParamState out = init_state;
  const double u = 1.0 - alpha;
  for (std::size_t e = 0; e < out.entries.size(); ++e)
    mix_entry(init_state.entries[e], final_state.entries[e], u, alpha,
              out.entries[e]);
  return out;
}

ParamState layer_interpolate(const ParamState& init_state,
                             const ParamState& final_state,
                             const LayerSelector& sel, double alpha) {
  check_compatible(init_state, final_state);
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("interpolate: alpha must lie in [0, 1]");
  const SelectionSplit split = select(init_state, sel);
  ParamState out = final_state;  // complement pinned at the final state
  if (alpha == 1.0) return out;
  const double u = 1.0 - alpha;
  for (std::size_t idx : split.selected) {
    if (alpha == 0.0)
      out.entries[idx].values = init_state.entries[idx].values;
    else
      mix_entry(init_state.entries[idx], final_state.entries[idx], u, alpha,
                out.entries[idx]);
  }
  return out;
}

InterpPath evaluate_path(const ModelSpec& spec, const ParamState& init_state,
                         const ParamState& final_state, const LayerSelector& sel,
                         const Dataset& data, Split split, int points) {
  spec.validate();
  check_compatible(init_state, final_state);
  if (init_state.spec_hash != spec.hash())
    throw std::invalid_argument("evaluate_path: states do not match the model spec");
  if (points < 3) throw std::invalid_argument("evaluate_path: need >= 3 grid points");
  data.validate();
  sel.validate(spec);

  const Eigen::Ref<const Eigen::MatrixXd> x =
      split == Split::Train ? data.train_features() : data.test_features();
  const std::vector<int> y =
      split == Split::Train ? data.train_labels() : data.test_labels();

  InterpPath path;
  path.varied = sel;
  path.endpoint_init_digest = init_state.digest();
  path.endpoint_final_digest = final_state.digest();
  path.eval_split = split;
  path.alphas.resize(static_cast<std::size_t>(points));
  path.losses.resize(static_cast<std::size_t>(points));
  path.accuracies.resize(static_cast<std::size_t>(points));

  const SelectionSplit selection = select(init_state, sel);

  // Everything upstream of the first varied layer is pinned at the final
  // state, so those activations are computed once and reused at every alpha.
  // The suffix arithmetic is identical to a full forward pass, which keeps the
  // cached evaluation bitwise equal to forward() on the interpolated state.
  int first_varied = spec.layer_count();
  for (std::size_t idx : selection.selected)
    first_varied = std::min(first_varied, init_state.entries[idx].layer);
  const Eigen::MatrixXd prefix =
      forward_prefix(spec, final_state, first_varied, x);

  ParamState mixed = final_state;
  const double denom = static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) {
    // Integer-grid coefficients: at index i, u = (K-1-i)/(K-1), v = i/(K-1).
    // Reversing the endpoints maps i -> K-1-i onto the same coefficient pair
    // swapped, so the loss sequence reverses exactly.
    const double v = static_cast<double>(i) / denom;
    const double u = static_cast<double>(points - 1 - i) / denom;
    path.alphas[static_cast<std::size_t>(i)] = v;

    for (std::size_t idx : selection.selected) {
      if (i == 0)
        mixed.entries[idx].values = init_state.entries[idx].values;
      else if (i == points - 1)
        mixed.entries[idx].values = final_state.entries[idx].values;
      else
        mix_entry(init_state.entries[idx], final_state.entries[idx], u, v,
                  mixed.entries[idx]);
    }

    const Eigen::MatrixXd logits = forward_suffix(spec, mixed, first_varied, prefix);
    const LogitMetrics m = logit_metrics(spec, logits, y);
    path.losses[static_cast<std::size_t>(i)] = m.loss;
    path.accuracies[static_cast<std::size_t>(i)] = m.accuracy;
  }
  return path;
}

PathShape classify(const InterpPath& path, const ShapeTolerances& tol) {
  path.validate();
  tol.validate();
  const std::vector<double>& loss = path.losses;
  const std::size_t k = loss.size();

  PathShape shape;
  shape.tolerances = tol;

  const double l0 = loss.front();
  const double l1 = loss.back();
  std::size_t summit = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (loss[i] > loss[summit]) summit = i;  // first argmax
  const double peak = loss[summit];

  // Barrier: the peak clears both endpoints by the rise tolerance, and an
  // increasing run ends at the summit. With the first-argmax convention the
  // run exists exactly when the summit is interior, which the peak condition
  // already forces; the explicit check keeps the procedure literal.
  const bool clears = peak > (1.0 + tol.rise_tol) * std::max(l0, l1);
  const bool rises = summit > 0 && loss[summit - 1] < loss[summit];
  if (clears && rises) {
    shape.tag = ShapeTag::Barrier;
    shape.summit_index = summit;
    shape.summit_alpha = path.alphas[summit];
    shape.height = peak - l0;
    return shape;
  }

  // Plateau: the first ceil(span*K) points hug the starting loss and the
  // final loss has genuinely dropped below the band.
  const std::size_t flat_count = static_cast<std::size_t>(
      std::ceil(tol.plateau_span * static_cast<double>(k)));
  const double band = tol.plateau_tol * l0;
  bool flat = true;
  for (std::size_t i = 0; i < std::min(flat_count, k); ++i)
    if (std::abs(loss[i] - l0) > band) {
      flat = false;
      break;
    }
  if (flat && l1 < (1.0 - tol.plateau_tol) * l0) {
    for (std::size_t i = 0; i < k; ++i) {
      if (std::abs(loss[i] - l0) > band) {
        shape.tag = ShapeTag::Plateau;
        shape.drop_index = i;
        shape.drop_alpha = path.alphas[i];
        return shape;
      }
    }
  }

  shape.tag = ShapeTag::NoBarrier;
  return shape;
}

BarrierSummit barrier_summit(const InterpPath& path, const ShapeTolerances& tol) {
  const PathShape shape = classify(path, tol);
  if (shape.tag != ShapeTag::Barrier)
    throw std::invalid_argument("barrier_summit: path classifies " +
                                to_string(shape.tag) + ", not barrier");
  const std::size_t k = path.alphas.size();
  BarrierSummit s;
  s.index = shape.summit_index;
  s.alpha = shape.summit_alpha;
  // Offsets are +/-5 grid points, clamped to the interior of the grid so the
  // reconstructed states stay strictly between the endpoints.
  const auto clamp_interior = [&](std::ptrdiff_t i) {
    const std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(k) - 2;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 1, hi));
  };
  s.alpha_before =
      path.alphas[clamp_interior(static_cast<std::ptrdiff_t>(s.index) - 5)];
  s.alpha_after =
      path.alphas[clamp_interior(static_cast<std::ptrdiff_t>(s.index) + 5)];
  return s;
}

double relative_distance(const ParamState& final_state,
                         const ParamState& init_state) {
  check_compatible(init_state, final_state);
  double diff_sq = 0.0;
  double base_sq = 0.0;
  for (std::size_t e = 0; e < init_state.entries.size(); ++e) {
    const auto& iv = init_state.entries[e].values;
    const auto& fv = final_state.entries[e].values;
    for (std::size_t i = 0; i < iv.size(); ++i) {
      const double d = fv[i] - iv[i];
      diff_sq += d * d;
      base_sq += iv[i] * iv[i];
    }
  }
  if (base_sq == 0.0)
    throw std::invalid_argument("relative_distance: the reference state has zero norm");
  return std::sqrt(diff_sq) / std::sqrt(base_sq);
}

}  // namespace pathline
