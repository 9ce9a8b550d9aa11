#pragma once

#include <utility>
#include <vector>

#include "fapc/spectral.hpp"

namespace fapc {

// One linear steering instance: drive y0 to within eps of yf in norm while
// matching it exactly on the projection subspace.
struct SteeringProblem {
  HeatModel model;
  ControlOperator control;
  Gramian gramian;
  double horizon = 0.0;
  double eps = 0.0;
  Subspace projection;
  Vector y0;
  Vector yf;
};

struct SteeringResult {
  Vector phi_min;
  Vector terminal;
  Vector predicted;  // closed-form terminal error, lives in the complement of M
  double error_norm = 0.0;
  double projection_residual = 0.0;
  double control_energy = 0.0;
  std::vector<std::pair<double, Vector>> control_samples;
};

// Quadratic objective whose unique stationary point generates the steering
// control: 1/2 <G phi, phi> + eps/2 <(I-pi_M) phi, phi> - <phi, yf - U(T) y0>.
double j_functional(const Vector& phi, const SteeringProblem& p);

// G phi + eps (I-pi_M) phi - (yf - U(T) y0)
Vector j_gradient(const Vector& phi, const SteeringProblem& p);

// phi_min = -(eps (I-pi_M) + G)^{-1} (U(T) y0 - yf)
Vector minimizer(const SteeringProblem& p);

// u(t) = B^T diag(exp(-n^2 (T-t))) phi
Vector control_signal(const SteeringProblem& p, const Vector& phi, double t);

// y(T) = U(T) y0 + G phi; the Gramian identity replaces the control integral
// exactly, so no time stepping is involved.
Vector terminal_state(const SteeringProblem& p, const Vector& phi);

// eps (I-pi_M) (eps (I-pi_M) + G)^{-1} (U(T) y0 - yf); equals the terminal
// error of the steered system and has no component inside M.
Vector predicted_error(const SteeringProblem& p);

// Full pipeline: minimize, steer, and collect diagnostics plus control
// samples at sample_count uniform times.
SteeringResult steer(const SteeringProblem& p, int sample_count);

}  // namespace fapc
