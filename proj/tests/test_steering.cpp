#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fapc/steering.hpp"
#include "oracles.hpp"

using fapc::ControlOperator;
using fapc::HeatModel;
using fapc::Matrix;
using fapc::SteeringProblem;
using fapc::Subspace;
using fapc::Vector;

namespace {

constexpr double kPi = std::numbers::pi;

SteeringProblem patch_instance(int n_modes, double eps, int m, uint64_t seed) {
  SteeringProblem p;
  p.model = HeatModel{n_modes};
  p.control = ControlOperator::distributed(0.3, 2.8, n_modes);
  p.horizon = 1.0;
  p.gramian = fapc::gramian_closed_form(p.model, p.control, p.horizon);
  p.eps = eps;
  p.projection = Subspace::leading_modes(n_modes, m);
  p.y0 = oracles::smooth_seeded_vector(n_modes, seed);
  p.yf = oracles::smooth_seeded_vector(n_modes, seed + 1);
  return p;
}

Vector drift_gap(const SteeringProblem& p) {
  return p.yf - fapc::semigroup_apply(p.model, p.horizon, p.y0);
}

}  // namespace

TEST_CASE("objective functional values") {
  SteeringProblem p = patch_instance(32, 1e-3, 4, 7001);

  CHECK(fapc::j_functional(Vector::Zero(32), p) == 0.0);

  SteeringProblem free_target = p;
  free_target.yf = fapc::semigroup_apply(p.model, p.horizon, p.y0);
  for (int k = 0; k < 5; ++k) {
    const Vector phi = oracles::smooth_seeded_vector(32, 400 + k);
    CHECK(fapc::j_functional(phi, free_target) >= 0.0);
  }

  // integral term against direct quadrature of the control magnitude
  const Vector phi = oracles::smooth_seeded_vector(32, 88);
  const double integral = oracles::trapezoid(
      [&p, &phi](double s) {
        return fapc::control_signal(p, phi, s).squaredNorm();
      },
      0.0, p.horizon, 4000);
  const Vector gap = drift_gap(p);
  const Vector complement = phi - fapc::project(p.projection, phi);
  const double ref = 0.5 * integral + 0.5 * p.eps * complement.dot(phi) - phi.dot(gap);
  const double mine = fapc::j_functional(phi, p);
  CHECK(std::abs(mine - ref) <= 1e-6 * std::max(std::abs(ref), 1e-3));
}

TEST_CASE("minimizer: degenerate forms and gradient-descent oracle") {
  SteeringProblem p = patch_instance(32, 1e-3, 4, 7001);

  SteeringProblem free_target = p;
  free_target.yf = fapc::semigroup_apply(p.model, p.horizon, p.y0);
  CHECK(fapc::minimizer(free_target).norm() == 0.0);

  // gramian = identity and full projection turn the operator into I
  SteeringProblem plain = p;
  plain.gramian.matrix = Matrix::Identity(32, 32);
  plain.projection = Subspace::leading_modes(32, 32);
  const Vector v = drift_gap(plain);
  CHECK((fapc::minimizer(plain) - v).norm() <= 1e-12 * v.norm());

  // first-order oracle on the strictly convex objective
  const Vector phi_min = fapc::minimizer(p);
  const double step = 1.0 / (oracles::svd_norm(p.gramian.matrix) + p.eps);
  const Vector phi_gd = oracles::gradient_descent(
      [&p](const Vector& phi) { return fapc::j_gradient(phi, p); }, Vector::Zero(32), step,
      100000);
  CHECK((phi_gd - phi_min).norm() <= 1e-5 * phi_min.norm());

  // stationarity
  CHECK(fapc::j_gradient(phi_min, p).norm() <= 1e-9 * (1.0 + p.yf.norm()));
}

TEST_CASE("control signal samples") {
  SteeringProblem p = patch_instance(16, 1e-2, 3, 501);

  for (double t : {0.0, 0.4, 1.0}) {
    CHECK(fapc::control_signal(p, Vector::Zero(16), t).norm() == 0.0);
  }

  const Vector phi = oracles::smooth_seeded_vector(16, 3);
  const Vector at_horizon = fapc::control_signal(p, phi, p.horizon);
  CHECK((at_horizon - p.control.matrix.transpose() * phi).norm() <= 1e-14);

  SteeringProblem lumped = p;
  lumped.control = ControlOperator::lumped(1.0, std::sqrt(2.0), 16);
  lumped.gramian = fapc::gramian_closed_form(lumped.model, lumped.control, lumped.horizon);
  const Vector u0 = fapc::control_signal(lumped, phi, 0.0);
  REQUIRE(u0.size() == 1);
  double direct = 0.0;
  for (int n = 1; n <= 16; ++n) {
    direct += lumped.control.matrix(n - 1, 0) * std::exp(-double(n) * n * p.horizon) * phi(n - 1);
  }
  CHECK(std::abs(u0(0) - direct) <= 1e-12);

  CHECK_THROWS_AS(fapc::control_signal(p, phi, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(fapc::control_signal(p, phi, p.horizon + 0.1), std::invalid_argument);
}

TEST_CASE("terminal state through the gramian identity and an ODE oracle") {
  SteeringProblem p = patch_instance(32, 1e-3, 4, 9100);

  const Vector free_end = fapc::semigroup_apply(p.model, p.horizon, p.y0);
  CHECK((fapc::terminal_state(p, Vector::Zero(32)) - free_end).norm() == 0.0);

  SteeringProblem no_gram = p;
  no_gram.gramian.matrix = Matrix::Zero(32, 32);
  const Vector phi = oracles::smooth_seeded_vector(32, 12);
  CHECK((fapc::terminal_state(no_gram, phi) - free_end).norm() == 0.0);

  // independent simulation of y' = A y + B u(t) with the synthesized control
  const int k_steps = 4000;
  std::vector<Vector> forcing(k_steps + 1);
  for (int k = 0; k <= k_steps; ++k) {
    const double t = p.horizon * k / k_steps;
    forcing[k] = p.control.matrix * fapc::control_signal(p, phi, t);
  }
  Vector lambdas(32);
  for (int n = 1; n <= 32; ++n) lambdas(n - 1) = p.model.lambda(n);
  const Vector simulated =
      oracles::exp_integrate_linear_forcing(lambdas, p.y0, forcing, p.horizon);
  CHECK((fapc::terminal_state(p, phi) - simulated).norm() <= 1e-6);
}

TEST_CASE("predicted terminal error identity") {
  SteeringProblem p = patch_instance(32, 1e-3, 4, 311);

  SteeringProblem full = p;
  full.projection = Subspace::leading_modes(32, 32);
  CHECK(fapc::predicted_error(full).norm() <= 1e-12);

  SteeringProblem free_target = p;
  free_target.yf = fapc::semigroup_apply(p.model, p.horizon, p.y0);
  CHECK(fapc::predicted_error(free_target).norm() == 0.0);

  const Vector predicted = fapc::predicted_error(p);
  CHECK(fapc::project(p.projection, predicted).norm() <= 1e-10);

  const Vector phi_min = fapc::minimizer(p);
  const Vector direct = fapc::terminal_state(p, phi_min) - p.yf;
  CHECK((direct - predicted).norm() <= 1e-8);
}

TEST_CASE("full steering pipeline diagnostics") {
  SteeringProblem p = patch_instance(32, 1e-3, 4, 7001);

  SteeringProblem free_target = p;
  free_target.yf = fapc::semigroup_apply(p.model, p.horizon, p.y0);
  const auto rest = fapc::steer(free_target, 11);
  CHECK(rest.error_norm == 0.0);
  CHECK(rest.control_energy == 0.0);

  SteeringProblem exact = p;
  exact.projection = Subspace::leading_modes(32, 32);
  const auto res_exact = fapc::steer(exact, 11);
  CHECK(res_exact.error_norm <= 1e-8 * (1.0 + exact.yf.norm()));

  const auto res = fapc::steer(p, 101);
  CHECK(res.projection_residual <= 1e-8 * (1.0 + p.yf.norm()));
  CHECK((res.terminal - p.yf - res.predicted).norm() <= 1e-8 * (1.0 + p.yf.norm()));
  REQUIRE(res.control_samples.size() == 101);
  CHECK(res.control_samples.front().first == 0.0);
  CHECK(res.control_samples.back().first == doctest::Approx(p.horizon));

  // energy identity against quadrature of the sampled control; the minimizer
  // amplifies high modes, whose boundary layer near the horizon needs a fine
  // trapezoid before the oracle itself clears 1e-6
  const double quad_energy = oracles::trapezoid(
      [&p, &res](double s) {
        return fapc::control_signal(p, res.phi_min, s).squaredNorm();
      },
      0.0, p.horizon, 20000);
  CHECK(std::abs(res.control_energy - quad_energy) <= 1e-6 * std::max(quad_energy, 1e-12));

  // optimality of the minimizer under random unit perturbations
  const double at_min = fapc::j_functional(res.phi_min, p);
  for (int k = 0; k < 100; ++k) {
    Vector v = oracles::seeded_vector(32, 5000 + k);
    v *= 1e-3 / v.norm();
    CHECK(fapc::j_functional(res.phi_min + v, p) >= at_min);
  }

  // analytic gradient against central differences at a generic point
  const Vector phi_probe = oracles::smooth_seeded_vector(32, 777);
  const Vector analytic = fapc::j_gradient(phi_probe, p);
  const Vector numeric = oracles::central_difference_gradient(
      [&p](const Vector& q) { return fapc::j_functional(q, p); }, phi_probe, 1e-5);
  CHECK((analytic - numeric).norm() <= 1e-6 * std::max(analytic.norm(), 1e-9));
}

TEST_CASE("regularization sweep is monotone in the terminal error") {
  double previous = std::numeric_limits<double>::infinity();
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    SteeringProblem p = patch_instance(32, eps, 4, 7001);
    const auto res = fapc::steer(p, 3);
    CHECK(res.error_norm <= previous + 1e-12);
    CHECK(res.projection_residual <= 1e-8);
    previous = res.error_norm;
  }
}
