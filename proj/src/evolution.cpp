#include "fapc/evolution.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace fapc {
namespace {

void check_grid(const TimeGrid& grid) {
  if (!(grid.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (grid.steps < 2) throw std::invalid_argument("time grid needs at least 2 steps");
}

}  // namespace

TransitionStack build_transition_stack(const HeatModel& model, const PerturbationField& field) {
  check_grid(field.grid);
  const int n = model.n_modes;
  const int k_steps = field.grid.steps;
  if (static_cast<int>(field.matrices.size()) != k_steps + 1) {
    throw DimensionError("perturbation field must be sampled at every grid node");
  }

  bool zero_field = true;
  Vector warm;
  for (int k = 0; k <= k_steps; ++k) {
    const Matrix& g = field.matrices[k];
    if (g.rows() != n || g.cols() != n) {
      throw DimensionError("perturbation sample does not match the mode count");
    }
    if (g.cwiseAbs().maxCoeff() != 0.0) zero_field = false;
    const double norm = operator_norm(g, &warm);
    if (norm > field.bound * (1.0 + 1e-8)) {
      std::ostringstream os;
      os << "perturbation sample " << k << " has norm " << norm
         << " above the declared bound " << field.bound;
      throw std::invalid_argument(os.str());
    }
  }

  const double dt = field.grid.dt();
  Vector half(n), full(n);
  for (int m = 1; m <= n; ++m) {
    half(m - 1) = std::exp(-model.lambda(m) * dt * 0.5);
    full(m - 1) = std::exp(-model.lambda(m) * dt);
  }

  TransitionStack stack;
  stack.grid = field.grid;
  stack.step.reserve(k_steps);
  if (zero_field) {
    // pure diagonal semigroup; one shared step matrix, no splitting error
    Matrix s = full.asDiagonal();
    for (int k = 0; k < k_steps; ++k) stack.step.push_back(s);
  } else {
    for (int k = 0; k < k_steps; ++k) {
      Matrix mid = 0.5 * dt * (field.matrices[k] + field.matrices[k + 1]);
      Matrix core = mid.exp();
      stack.step.push_back(half.asDiagonal() * core * half.asDiagonal());
    }
  }

  stack.forward.reserve(k_steps + 1);
  stack.forward.push_back(Matrix::Identity(n, n));
  for (int k = 0; k < k_steps; ++k) {
    stack.forward.push_back(stack.step[k] * stack.forward.back());
  }

  stack.terminal.assign(k_steps + 1, Matrix());
  stack.terminal[k_steps] = Matrix::Identity(n, n);
  for (int k = k_steps - 1; k >= 0; --k) {
    stack.terminal[k] = stack.terminal[k + 1] * stack.step[k];
  }

  Vector warm_fwd, warm_term;
  double bound = 0.0;
  for (int k = 0; k <= k_steps; ++k) {
    bound = std::max(bound, operator_norm(stack.forward[k], &warm_fwd));
    bound = std::max(bound, operator_norm(stack.terminal[k], &warm_term));
  }
  stack.norm_bound = bound;
  return stack;
}

Vector evolution_apply(const TransitionStack& stack, int k_from, int k_to, const Vector& x) {
  const int k_steps = stack.grid.steps;
  if (k_from < 0 || k_to > k_steps || k_from > k_to) {
    throw std::out_of_range("evolution indices must satisfy 0 <= k_from <= k_to <= K");
  }
  if (x.size() != stack.forward.front().rows()) {
    throw DimensionError("evolution input does not match the mode count");
  }
  Vector y = x;
  for (int k = k_from; k < k_to; ++k) y = stack.step[k] * y;
  return y;
}

Vector adjoint_terminal_apply(const TransitionStack& stack, int k, const Vector& eta) {
  if (k < 0 || k > stack.grid.steps) throw std::out_of_range("node index out of range");
  if (eta.size() != stack.terminal[k].rows()) {
    throw DimensionError("adjoint input does not match the mode count");
  }
  return stack.terminal[k].transpose() * eta;
}

Gramian gramian_time_varying(const TransitionStack& stack, const ControlOperator& b) {
  const int n = static_cast<int>(stack.forward.front().rows());
  if (b.n_modes() != n) {
    throw DimensionError("control operator mode count does not match the stack");
  }

  const int k_steps = stack.grid.steps;
  const double dt = stack.grid.dt();
  const bool rank_one = b.kind == ControlOperator::Kind::lumped;
  Matrix bbt;
  if (!rank_one) bbt = b.bbt();

  Matrix out = Matrix::Zero(n, n);
  for (int k = 0; k <= k_steps; ++k) {
    const double weight = (k == 0 || k == k_steps) ? 0.5 * dt : dt;
    if (rank_one) {
      Vector v = stack.terminal[k] * b.matrix.col(0);
      out.noalias() += weight * (v * v.transpose());
    } else {
      out.noalias() += weight * (stack.terminal[k] * bbt * stack.terminal[k].transpose());
    }
  }

  Gramian gram;
  gram.matrix = 0.5 * (out + out.transpose());
  gram.horizon = stack.grid.horizon;
  gram.provenance = Gramian::Provenance::quadrature;
  gram.steps = k_steps;
  return gram;
}

}  // namespace fapc
