#pragma once

#include <string>

#include "fapc/linops.hpp"

namespace fapc {

// Dirichlet heat equation on (0, pi), truncated to the first N sine modes.
// Mode indexing is 1-based everywhere: e_n(theta) = sqrt(2/pi) sin(n theta)
// with decay rate n^2.
struct HeatModel {
  int n_modes = 0;

  double lambda(int n) const { return static_cast<double>(n) * n; }  // n in 1..N
};

// diag(exp(-n^2 t)) x
Vector semigroup_apply(const HeatModel& model, double t, const Vector& x);

// Mode-space matrix of multiplication by the indicator of (a, b): entries
// integral_a^b e_m e_n, in closed form.
Matrix distributed_control_matrix(double a, double b, int n_modes);

// Mode coefficients of the indicator of (alpha1, alpha2):
// b_n = sqrt(2/pi) (cos(n alpha1) - cos(n alpha2)) / n.
Vector lumped_control_vector(double alpha1, double alpha2, int n_modes);

struct ControlOperator {
  enum class Kind { distributed, lumped, full_matrix };

  Kind kind = Kind::full_matrix;
  double lo = 0.0, hi = 0.0;  // interval parameters for the two analytic kinds
  Matrix matrix;              // realized N x input_dim map

  int input_dim() const { return static_cast<int>(matrix.cols()); }
  int n_modes() const { return static_cast<int>(matrix.rows()); }

  // B B^T in mode space. Assembled per kind: the lumped case stays an exact
  // rank-one outer product.
  Matrix bbt() const;

  static ControlOperator distributed(double a, double b, int n_modes);
  static ControlOperator lumped(double alpha1, double alpha2, int n_modes);
  static ControlOperator full(Matrix entries);
};

struct Gramian {
  enum class Provenance { closed_form, quadrature };

  Matrix matrix;
  double horizon = 0.0;
  Provenance provenance = Provenance::closed_form;
  int steps = 0;  // quadrature only
};

// Gamma_mn = (B B^T)_mn (1 - exp(-(m^2+n^2) T)) / (m^2+n^2). Only the two
// analytic control kinds keep B B^T constant in mode space; full matrices
// must go through the quadrature path.
Gramian gramian_closed_form(const HeatModel& model, const ControlOperator& b, double horizon);

// Composite trapezoid on a uniform grid in s of U(T-s) B B^T U(T-s)^T,
// symmetrized on return. Second-order accurate in the step size.
Gramian gramian_quadrature(const HeatModel& model, const ControlOperator& b, double horizon,
                           int steps);

}  // namespace fapc
