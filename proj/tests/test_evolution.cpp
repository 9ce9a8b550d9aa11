#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "fapc/evolution.hpp"
#include "oracles.hpp"

using fapc::ControlOperator;
using fapc::HeatModel;
using fapc::Matrix;
using fapc::PerturbationField;
using fapc::TimeGrid;
using fapc::TransitionStack;
using fapc::Vector;

namespace {

constexpr double kPi = std::numbers::pi;

// Mode-space matrix of multiplication by sin(theta), entries by quadrature so
// the evolution tests do not lean on any library integral.
Matrix sine_profile_matrix(int n_modes) {
  Matrix s(n_modes, n_modes);
  for (int m = 1; m <= n_modes; ++m) {
    for (int n = m; n <= n_modes; ++n) {
      const double value = oracles::simpson(
          [m, n](double theta) {
            return std::sin(theta) * (2.0 / kPi) * std::sin(m * theta) * std::sin(n * theta);
          },
          0.0, kPi, 2000);
      s(m - 1, n - 1) = value;
      s(n - 1, m - 1) = value;
    }
  }
  return s;
}

PerturbationField constant_field(const TimeGrid& grid, const Matrix& g, double bound) {
  PerturbationField field;
  field.grid = grid;
  field.matrices.assign(grid.steps + 1, g);
  field.bound = bound;
  return field;
}

PerturbationField modulated_field(const TimeGrid& grid, const Matrix& g, double bound) {
  PerturbationField field;
  field.grid = grid;
  field.bound = bound;
  field.matrices.reserve(grid.steps + 1);
  for (int k = 0; k <= grid.steps; ++k) {
    field.matrices.push_back(std::cos(grid.node(k)) * g);
  }
  return field;
}

Matrix diagonal_semigroup(const HeatModel& model, double t) {
  Matrix d = Matrix::Zero(model.n_modes, model.n_modes);
  for (int n = 1; n <= model.n_modes; ++n) d(n - 1, n - 1) = std::exp(-model.lambda(n) * t);
  return d;
}

}  // namespace

TEST_CASE("transition stack endpoints and the unperturbed reduction") {
  const HeatModel model{6};
  const TimeGrid grid{1.0, 64};
  const auto stack =
      fapc::build_transition_stack(model, constant_field(grid, Matrix::Zero(6, 6), 0.0));

  CHECK((stack.forward.front() - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((stack.terminal.back() - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(stack.forward.size() == 65);
  REQUIRE(stack.terminal.size() == 65);
  REQUIRE(stack.step.size() == 64);

  for (int k = 0; k <= 64; ++k) {
    const Matrix exact = diagonal_semigroup(model, grid.node(k));
    CHECK((stack.forward[k] - exact).cwiseAbs().maxCoeff() <= 1e-12);
    const Matrix tail = diagonal_semigroup(model, grid.horizon - grid.node(k));
    CHECK((stack.terminal[k] - tail).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(stack.norm_bound == doctest::Approx(1.0));
}

TEST_CASE("commuting scalar perturbation is propagated without splitting error") {
  const HeatModel model{5};
  const TimeGrid grid{0.5, 40};
  const double c = 0.7;
  const auto stack =
      fapc::build_transition_stack(model, constant_field(grid, c * Matrix::Identity(5, 5), c));

  // A and c I commute, so the split propagator collapses to the exact flow
  const Matrix exact = std::exp(c * grid.horizon) * diagonal_semigroup(model, grid.horizon);
  CHECK((stack.forward.back() - exact).cwiseAbs().maxCoeff() <= 1e-10 * exact.norm());
}

TEST_CASE("declared bound is enforced sample by sample") {
  const HeatModel model{4};
  const TimeGrid grid{1.0, 8};
  auto field = constant_field(grid, 0.1 * Matrix::Identity(4, 4), 0.1);
  field.matrices[3] = 0.5 * Matrix::Identity(4, 4);

  try {
    fapc::build_transition_stack(model, field);
    FAIL("expected the bound check to reject sample 3");
  } catch (const std::invalid_argument& err) {
    const std::string what = err.what();
    CHECK(what.find("sample 3") != std::string::npos);
    CHECK(what.find("bound") != std::string::npos);
  }

  field.matrices[3] = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(fapc::build_transition_stack(model, field), fapc::DimensionError);

  field.matrices.pop_back();
  CHECK_THROWS_AS(fapc::build_transition_stack(model, field), fapc::DimensionError);
}

TEST_CASE("split propagator converges at second order to an adaptive reference") {
  const HeatModel model{8};
  const Matrix s = 0.3 * sine_profile_matrix(8);
  const double bound = oracles::svd_norm(s);

  const auto rhs = [&model, &s](double t, const Matrix& y) -> Matrix {
    Matrix out = std::cos(t) * (s * y);
    for (int n = 1; n <= model.n_modes; ++n) out.row(n - 1) -= model.lambda(n) * y.row(n - 1);
    return out;
  };
  const Matrix reference =
      oracles::ode45_matrix(rhs, Matrix::Identity(8, 8), 0.0, 1.0, 1e-11, 1e-13);

  double errors[2];
  int idx = 0;
  for (int k_steps : {400, 800}) {
    const TimeGrid grid{1.0, k_steps};
    const auto stack = fapc::build_transition_stack(model, modulated_field(grid, s, bound));
    errors[idx++] = (stack.forward.back() - reference).cwiseAbs().maxCoeff();

    // uniform bound on the discrete family: products of exact diagonal
    // half-steps and exponentials of averaged samples
    CHECK(stack.norm_bound <= std::exp(bound * grid.horizon) * (1.0 + 1e-6));
  }
  CHECK(errors[1] <= 1e-6);
  CHECK(errors[0] / errors[1] >= 3.5);
  CHECK(errors[0] / errors[1] <= 4.5);
}

TEST_CASE("propagator application and the cocycle property") {
  const HeatModel model{8};
  const Matrix s = 0.3 * sine_profile_matrix(8);
  const TimeGrid grid{1.0, 200};
  const auto stack =
      fapc::build_transition_stack(model, modulated_field(grid, s, oracles::svd_norm(s)));

  const Vector x = oracles::smooth_seeded_vector(8, 61);
  CHECK((fapc::evolution_apply(stack, 57, 57, x) - x).norm() == 0.0);

  const Vector whole = fapc::evolution_apply(stack, 0, 200, x);
  for (int j : {1, 53, 120, 199}) {
    const Vector split =
        fapc::evolution_apply(stack, j, 200, fapc::evolution_apply(stack, 0, j, x));
    CHECK((whole - split).norm() <= 1e-10 * x.norm());
  }

  CHECK_THROWS_AS(fapc::evolution_apply(stack, -1, 5, x), std::out_of_range);
  CHECK_THROWS_AS(fapc::evolution_apply(stack, 0, 201, x), std::out_of_range);
  CHECK_THROWS_AS(fapc::evolution_apply(stack, 9, 3, x), std::out_of_range);

  // unperturbed stack reproduces the analytic semigroup end to end
  const auto plain =
      fapc::build_transition_stack(model, constant_field(grid, Matrix::Zero(8, 8), 0.0));
  const Vector through = fapc::evolution_apply(plain, 0, 200, x);
  CHECK((through - fapc::semigroup_apply(model, 1.0, x)).norm() <= 1e-12);
}

TEST_CASE("adjoint application matches the transposed family") {
  const HeatModel model{8};
  const Matrix s = 0.3 * sine_profile_matrix(8);
  const TimeGrid grid{1.0, 100};
  const auto stack =
      fapc::build_transition_stack(model, modulated_field(grid, s, oracles::svd_norm(s)));

  const Vector x = oracles::smooth_seeded_vector(8, 21);
  const Vector eta = oracles::smooth_seeded_vector(8, 22);
  for (int k : {0, 37, 100}) {
    const double forward_pairing = fapc::evolution_apply(stack, k, 100, x).dot(eta);
    const double adjoint_pairing = x.dot(fapc::adjoint_terminal_apply(stack, k, eta));
    CHECK(std::abs(forward_pairing - adjoint_pairing) <= 1e-12);
  }

  // diagonal case: adjoint equals the remaining semigroup itself
  const auto plain =
      fapc::build_transition_stack(model, constant_field(grid, Matrix::Zero(8, 8), 0.0));
  const Vector adj = fapc::adjoint_terminal_apply(plain, 40, eta);
  const Vector direct = fapc::semigroup_apply(model, 1.0 - grid.node(40), eta);
  CHECK((adj - direct).norm() <= 1e-12);

  CHECK_THROWS_AS(fapc::adjoint_terminal_apply(stack, 101, eta), std::out_of_range);
}

TEST_CASE("time-varying gramian: unperturbed agreement, zero control, positivity") {
  const HeatModel model{8};
  const auto control = ControlOperator::distributed(0.0, kPi, 8);
  const TimeGrid grid{1.0, 2000};

  const auto plain =
      fapc::build_transition_stack(model, constant_field(grid, Matrix::Zero(8, 8), 0.0));
  const auto gram = fapc::gramian_time_varying(plain, control);
  const auto closed = fapc::gramian_closed_form(model, control, 1.0);
  const double rel = (gram.matrix - closed.matrix).norm() / closed.matrix.norm();
  CHECK(rel <= 1e-5);
  CHECK(gram.provenance == fapc::Gramian::Provenance::quadrature);
  CHECK(gram.steps == 2000);

  const auto no_control = ControlOperator::full(Matrix::Zero(8, 2));
  CHECK(fapc::gramian_time_varying(plain, no_control).matrix.norm() == 0.0);

  const Matrix s = 0.3 * sine_profile_matrix(8);
  const TimeGrid coarse{1.0, 400};
  const auto perturbed =
      fapc::build_transition_stack(model, modulated_field(coarse, s, oracles::svd_norm(s)));
  const auto gram_p = fapc::gramian_time_varying(perturbed, control);
  CHECK(fapc::is_symmetric(gram_p.matrix));
  const Vector eigs = oracles::sym_eigenvalues(gram_p.matrix);
  CHECK(eigs.minCoeff() >= -1e-10 * eigs.cwiseAbs().maxCoeff());

  const auto narrow = ControlOperator::lumped(1.0, std::sqrt(2.0), 8);
  CHECK_NOTHROW(fapc::gramian_time_varying(perturbed, narrow));
}
