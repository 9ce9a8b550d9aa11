#pragma once

#include <vector>

#include "fapc/spectral.hpp"

namespace fapc {

struct TimeGrid {
  double horizon = 0.0;
  int steps = 0;  // K >= 2; nodes t_k = k T / K, k = 0..K

  double dt() const { return horizon / steps; }
  double node(int k) const { return horizon * k / steps; }
};

// Sampled bounded perturbation G(t_k) of the diagonal generator.
struct PerturbationField {
  TimeGrid grid;
  std::vector<Matrix> matrices;  // K+1 entries
  double bound = 0.0;            // uniform norm bound L
};

// Discrete two-parameter evolution family for y' = (A + G(t)) y, built once
// and then applied everywhere. forward[k] propagates 0 -> t_k, terminal[k]
// propagates t_k -> T, step[k] propagates t_k -> t_{k+1}.
struct TransitionStack {
  TimeGrid grid;
  std::vector<Matrix> forward;
  std::vector<Matrix> terminal;
  std::vector<Matrix> step;
  double norm_bound = 0.0;  // max over nodes of the forward/terminal norms
};

// Strang splitting per step: exact half-steps of the diagonal semigroup
// around a dense exponential of the averaged perturbation. Second order in
// the step size; exact when the field vanishes.
TransitionStack build_transition_stack(const HeatModel& model, const PerturbationField& field);

// Applies the composed propagator t_{k_from} -> t_{k_to}.
Vector evolution_apply(const TransitionStack& stack, int k_from, int k_to, const Vector& x);

// terminal[k]^T eta. The generator's diagonal part is self-adjoint, so the
// adjoint family is the elementwise transpose, exact at machine precision.
Vector adjoint_terminal_apply(const TransitionStack& stack, int k, const Vector& eta);

// Composite trapezoid over the grid of terminal[k] B B^T terminal[k]^T,
// symmetrized. Shares its nodes with the propagation grid so the terminal
// identity of the steering construction telescopes without interpolation.
Gramian gramian_time_varying(const TransitionStack& stack, const ControlOperator& b);

}  // namespace fapc
