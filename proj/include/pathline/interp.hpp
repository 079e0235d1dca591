#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathline/data.hpp"
#include "pathline/nn.hpp"

namespace pathline {

// Relative thresholds for the path-shape decision procedure. Every reported
// shape carries the tolerances it was classified under.
struct ShapeTolerances {
  double rise_tol = 0.05;      // barrier must exceed both endpoints by this factor
  double plateau_tol = 0.05;   // flatness band around the starting loss
  double plateau_span = 0.6;   // fraction of the path that must stay in the band

  void validate() const;
  bool operator==(const ShapeTolerances&) const = default;
};

enum class ShapeTag { NoBarrier, Barrier, Plateau };

std::string to_string(ShapeTag t);
ShapeTag shape_tag_from_string(const std::string& s);

struct PathShape {
  ShapeTag tag = ShapeTag::NoBarrier;
  // Barrier only: grid position of the loss summit and its height above the
  // starting loss.
  std::size_t summit_index = 0;
  double summit_alpha = 0.0;
  double height = 0.0;
  // Plateau only: first grid point whose loss leaves the flatness band.
  std::size_t drop_index = 0;
  double drop_alpha = 0.0;
  ShapeTolerances tolerances;

  std::string describe() const;  // e.g. "barrier(summit=0.42,height=0.31)"
};

// A sampled loss/accuracy curve between two parameter states.
struct InterpPath {
  std::vector<double> alphas;  // uniform grid over [0, 1], endpoints exact
  std::vector<double> losses;
  std::vector<double> accuracies;
  LayerSelector varied;
  std::uint64_t endpoint_init_digest = 0;
  std::uint64_t endpoint_final_digest = 0;
  Split eval_split = Split::Test;

  std::size_t points() const { return alphas.size(); }
  void validate() const;
};

// theta_alpha = (1-alpha)*theta_i + alpha*theta_f, elementwise. alpha = 0 and
// alpha = 1 return the exact endpoint states.
ParamState interpolate(const ParamState& init_state, const ParamState& final_state,
                       double alpha);

// Selected entries interpolate as above; the complement is pinned at the
// final state.
ParamState layer_interpolate(const ParamState& init_state,
                             const ParamState& final_state,
                             const LayerSelector& sel, double alpha);

// Losses/accuracies over a K-point uniform grid, evaluated on the full chosen
// split. Grid coefficients are computed from integer indices, so swapping the
// endpoints yields the exactly reversed loss sequence.
InterpPath evaluate_path(const ModelSpec& spec, const ParamState& init_state,
                         const ParamState& final_state, const LayerSelector& sel,
                         const Dataset& data, Split split, int points = 51);

// Fixed decision procedure over the sampled losses; total on finite paths.
PathShape classify(const InterpPath& path, const ShapeTolerances& tol = {});

// Summit of a Barrier path plus the +/-5-grid-point offset positions (clamped
// to the interior); states are reconstructed via interpolate at these alphas.
struct BarrierSummit {
  std::size_t index = 0;
  double alpha = 0.0;
  double alpha_before = 0.0;  // 5 grid points earlier, clamped
  double alpha_after = 0.0;   // 5 grid points later, clamped
};
BarrierSummit barrier_summit(const InterpPath& path, const ShapeTolerances& tol = {});

// ||final - init||_F / ||init||_F over the concatenation of all entries.
double relative_distance(const ParamState& final_state, const ParamState& init_state);

}  // namespace pathline
