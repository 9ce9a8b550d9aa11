#include "fapc/steering.hpp"

#include <cmath>

namespace fapc {
namespace {

void check_problem(const SteeringProblem& p, const Vector& phi) {
  const int n = p.model.n_modes;
  if (p.gramian.matrix.rows() != n || p.gramian.matrix.cols() != n) {
    throw DimensionError("gramian does not match the mode count");
  }
  if (p.y0.size() != n || p.yf.size() != n) {
    throw DimensionError("state vectors do not match the mode count");
  }
  if (phi.size() != n) throw DimensionError("phi does not match the mode count");
  if (p.projection.ambient() != n) {
    throw DimensionError("projection subspace does not match the mode count");
  }
  if (!(p.eps > 0.0)) throw std::invalid_argument("eps must be positive");
}

Vector drift_gap(const SteeringProblem& p) {
  // yf - U(T) y0, the reachable-set offset every quantity below works against
  return p.yf - semigroup_apply(p.model, p.horizon, p.y0);
}

}  // namespace

double j_functional(const Vector& phi, const SteeringProblem& p) {
  check_problem(p, phi);
  const Vector gap = drift_gap(p);
  const double quad = phi.dot(p.gramian.matrix * phi);
  const double reg = phi.dot(phi - p.projection.project(phi));
  return 0.5 * quad + 0.5 * p.eps * reg - phi.dot(gap);
}

Vector j_gradient(const Vector& phi, const SteeringProblem& p) {
  check_problem(p, phi);
  const Vector gap = drift_gap(p);
  return p.gramian.matrix * phi + p.eps * (phi - p.projection.project(phi)) - gap;
}

Vector minimizer(const SteeringProblem& p) {
  check_problem(p, p.y0);
  const Vector w = semigroup_apply(p.model, p.horizon, p.y0) - p.yf;
  return -resolvent_like_apply(p.gramian.matrix, p.eps, p.projection, w);
}

Vector control_signal(const SteeringProblem& p, const Vector& phi, double t) {
  check_problem(p, phi);
  if (t < 0.0 || t > p.horizon) {
    throw std::invalid_argument("control time must lie inside the horizon");
  }
  const Vector weighted = semigroup_apply(p.model, p.horizon - t, phi);
  return p.control.matrix.transpose() * weighted;
}

Vector terminal_state(const SteeringProblem& p, const Vector& phi) {
  check_problem(p, phi);
  return semigroup_apply(p.model, p.horizon, p.y0) + p.gramian.matrix * phi;
}

Vector predicted_error(const SteeringProblem& p) {
  check_problem(p, p.y0);
  const Vector w = semigroup_apply(p.model, p.horizon, p.y0) - p.yf;
  const Vector x = resolvent_like_apply(p.gramian.matrix, p.eps, p.projection, w);
  return p.eps * p.projection.complement(x);
}

SteeringResult steer(const SteeringProblem& p, int sample_count) {
  if (sample_count < 2) throw std::invalid_argument("need at least 2 control samples");

  SteeringResult result;
  result.phi_min = minimizer(p);
  result.terminal = terminal_state(p, result.phi_min);
  result.predicted = predicted_error(p);

  const Vector mismatch = result.terminal - p.yf;
  result.error_norm = mismatch.norm();
  result.projection_residual = p.projection.project(mismatch).norm();
  result.control_energy = result.phi_min.dot(p.gramian.matrix * result.phi_min);

  result.control_samples.reserve(sample_count);
  for (int i = 0; i < sample_count; ++i) {
    const double t = p.horizon * i / (sample_count - 1);
    result.control_samples.emplace_back(t, control_signal(p, result.phi_min, t));
  }
  return result;
}

}  // namespace fapc
