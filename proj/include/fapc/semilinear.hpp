#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fapc/evolution.hpp"
#include "fapc/steering.hpp"

namespace fapc {

// Pointwise scalar nonlinearities f (state coupling, differentiable with
// bounded derivative) and g (bounded forcing with envelope m(t)), both
// entering through their values on a physical collocation grid. Entries are
// code-level registry members selected by name; both scale with the shared
// bound L.
struct Nonlinearity {
  std::string f_name;
  std::string g_name;
  double bound = 0.0;  // L

  std::function<double(double, double)> f;        // f(t, y)
  std::function<double(double, double)> f_prime;  // d f / d y
  std::function<double(double, double)> g;        // g(t, y)
  std::function<double(double)> envelope;         // m(t) >= sup_y |g(t, y)|
};

// Registry lookup; throws ConfigError for unknown names. f names:
// zero, linear, tanh, sine. g names: zero, sine, tanh.
Nonlinearity make_nonlinearity(const std::string& f_name, const std::string& g_name, double bound);

// Physical grid theta_j = j pi / (P+1) paired with the discrete sine
// quadrature that inverts it. analysis * synthesis is the identity exactly
// (up to rounding) once P >= 2N, which every constructor enforces by default
// with P = 2N + 1.
struct CollocationMap {
  int points = 0;    // P
  Matrix synthesis;  // P x N, grid values of the mode basis
  Matrix analysis;   // N x P, (pi / (P+1)) synthesis^T

  static CollocationMap make(int n_modes, int points);
  static CollocationMap make(int n_modes) { return make(n_modes, 2 * n_modes + 1); }
};

struct IterationParams {
  double tol = 1e-8;
  int max_iter = 50;
  double relaxation = 1.0;  // omega in (0, 1]
};

struct SemilinearProblem {
  SteeringProblem base;  // gramian holds the linear reference; the loop builds its own
  Nonlinearity nonlinearity;
  CollocationMap colloc;
  TimeGrid grid;
  IterationParams iteration;
};

// Mode coefficients sampled at the grid nodes, entries 0..K.
using Trajectory = std::vector<Vector>;

// Averaged derivative matrix F(t, z) = integral_0^1 f'(t, r z) dr, evaluated
// pointwise on the collocation grid with 16-node Gauss-Legendre quadrature
// and conjugated back to mode space. Symmetric, with norm at most L.
Matrix quasilinearize(const Nonlinearity& nl, const CollocationMap& colloc, double t,
                      const Vector& z);

// G_k = quasilinearize at (t_k, z_k) for every node.
PerturbationField field_from_trajectory(const SemilinearProblem& p, const Trajectory& z);

// Mode coefficients of g(t, z(theta)) on the collocation grid.
Vector forcing_coefficients(const Nonlinearity& nl, const CollocationMap& colloc, double t,
                            const Vector& z);

struct ControlMapResult {
  std::vector<Vector> u;  // control samples at every node
  Vector phi;             // regularized adjoint state
  Vector steering_gap;    // h(z): target minus free endpoint under the frozen field
  double gamma_hat = 0.0;
  double r_bound = 0.0;   // admissibility radius R_eps from measured constants
  double max_u_norm = 0.0;
  bool bound_ok = true;
};

// The frozen-field steering control u(t_k) = B^T terminal[k]^T phi with
// phi = (eps (I-pi_M) + Gamma(z))^{-1} h(z). Also evaluates the measured
// admissibility bound; a violation is reported, not fatal.
ControlMapResult control_map(const SemilinearProblem& p, const Trajectory& z,
                             const TransitionStack& stack, const Gramian& gram);

struct ThetaResult {
  Trajectory trajectory;
  ControlMapResult control;
  double delta = 0.0;  // coercivity of the iterate's own Gramian on M
};

// One pass of the controlled propagation: freeze the field along z, build
// the stack and its Gramian, synthesize the control, and march the state
// with trapezoid Duhamel accumulation of the forcing.
ThetaResult theta_step(const SemilinearProblem& p, const Trajectory& z);
Trajectory theta_apply(const SemilinearProblem& p, const Trajectory& z);

struct FixedPointReport {
  bool converged = false;
  int iterations = 0;  // number of theta evaluations
  std::vector<double> residual_history;
  double terminal_error_norm = 0.0;
  double projection_residual = 0.0;
  double predicted_error_norm = 0.0;  // eps |(I-pi_M) phi| of the final iterate
  double control_energy = 0.0;
  double gamma_hat = 0.0;
  double delta = 0.0;
  Trajectory final_trajectory;
};

// Damped Picard iteration z <- (1-omega) z + omega Theta(z) from the free
// trajectory (zero control, active forcing). The relaxation halves, down to
// 1/16, after three consecutive residual increases. Non-convergence is
// reported honestly, never masked.
FixedPointReport fixed_point_solve(const SemilinearProblem& p);

struct EpsStudyRow {
  double eps = 0.0;
  double terminal_error_norm = 0.0;
  double projection_residual = 0.0;
  double predicted_error_norm = 0.0;
  int iterations = 0;
  double control_energy = 0.0;
  double gamma_hat = 0.0;
  double delta = 0.0;
  bool converged = false;
  std::vector<double> residual_history;  // convergence trace for reports
};

// Runs fixed_point_solve per regularization level. Instances are independent;
// threads > 1 distributes them with results assembled in grid order, so the
// output is identical for any thread count.
std::vector<EpsStudyRow> epsilon_study(const SemilinearProblem& tmpl,
                                       const std::vector<double>& eps_grid, int threads = 1);

}  // namespace fapc
