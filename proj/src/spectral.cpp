#include "fapc/spectral.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fapc {
namespace {

constexpr double kPi = std::numbers::pi;

void check_interval(double lo, double hi) {
  if (!(0.0 <= lo && lo < hi && hi <= kPi)) {
    std::ostringstream os;
    os << "interval (" << lo << ", " << hi << ") must be ordered inside [0, pi]";
    throw std::invalid_argument(os.str());
  }
}

void check_modes(int n_modes) {
  if (n_modes < 1) throw std::invalid_argument("mode count must be at least 1");
}

// antiderivative of (2/pi) sin(m t) sin(n t)
double cross_term(int m, int n, double t) {
  if (m == n) {
    return (t - std::sin(2.0 * n * t) / (2.0 * n)) / kPi;
  }
  return (std::sin((m - n) * t) / (m - n) - std::sin((m + n) * t) / (m + n)) / kPi;
}

}  // namespace

Vector semigroup_apply(const HeatModel& model, double t, const Vector& x) {
  if (t < 0.0) throw std::invalid_argument("semigroup time must be nonnegative");
  if (x.size() != model.n_modes) {
    throw DimensionError("semigroup input length does not match the mode count");
  }
  Vector out(x.size());
  for (int n = 1; n <= model.n_modes; ++n) {
    out(n - 1) = std::exp(-model.lambda(n) * t) * x(n - 1);
  }
  return out;
}

Matrix distributed_control_matrix(double a, double b, int n_modes) {
  check_interval(a, b);
  check_modes(n_modes);
  Matrix out(n_modes, n_modes);
  for (int m = 1; m <= n_modes; ++m) {
    for (int n = m; n <= n_modes; ++n) {
      const double value = cross_term(m, n, b) - cross_term(m, n, a);
      out(m - 1, n - 1) = value;
      out(n - 1, m - 1) = value;
    }
  }
  return out;
}

Vector lumped_control_vector(double alpha1, double alpha2, int n_modes) {
  check_interval(alpha1, alpha2);
  check_modes(n_modes);
  Vector out(n_modes);
  const double scale = std::sqrt(2.0 / kPi);
  for (int n = 1; n <= n_modes; ++n) {
    out(n - 1) = scale * (std::cos(n * alpha1) - std::cos(n * alpha2)) / n;
  }
  return out;
}

ControlOperator ControlOperator::distributed(double a, double b, int n_modes) {
  ControlOperator op;
  op.kind = Kind::distributed;
  op.lo = a;
  op.hi = b;
  op.matrix = distributed_control_matrix(a, b, n_modes);
  return op;
}

ControlOperator ControlOperator::lumped(double alpha1, double alpha2, int n_modes) {
  ControlOperator op;
  op.kind = Kind::lumped;
  op.lo = alpha1;
  op.hi = alpha2;
  op.matrix = lumped_control_vector(alpha1, alpha2, n_modes);
  return op;
}

ControlOperator ControlOperator::full(Matrix entries) {
  if (entries.rows() < 1 || entries.cols() < 1) {
    throw DimensionError("full control matrix must be nonempty");
  }
  ControlOperator op;
  op.kind = Kind::full_matrix;
  op.matrix = std::move(entries);
  return op;
}

Matrix ControlOperator::bbt() const {
  if (kind == Kind::lumped) {
    return matrix * matrix.transpose();  // exact rank-one outer product
  }
  Matrix out = matrix * matrix.transpose();
  return 0.5 * (out + out.transpose());
}

Gramian gramian_closed_form(const HeatModel& model, const ControlOperator& b, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (b.kind == ControlOperator::Kind::full_matrix) {
    throw std::invalid_argument(
        "closed-form gramian needs an analytic control kind; integrate a full matrix with the "
        "quadrature path");
  }
  if (b.n_modes() != model.n_modes) {
    throw DimensionError("control operator mode count does not match the model");
  }

  const Matrix bbt = b.bbt();
  const int n = model.n_modes;
  Matrix out(n, n);
  for (int m = 1; m <= n; ++m) {
    for (int k = m; k <= n; ++k) {
      const double rate = model.lambda(m) + model.lambda(k);
      const double value = bbt(m - 1, k - 1) * (1.0 - std::exp(-rate * horizon)) / rate;
      out(m - 1, k - 1) = value;
      out(k - 1, m - 1) = value;
    }
  }

  Gramian gram;
  gram.matrix = std::move(out);
  gram.horizon = horizon;
  gram.provenance = Gramian::Provenance::closed_form;
  return gram;
}

Gramian gramian_quadrature(const HeatModel& model, const ControlOperator& b, double horizon,
                           int steps) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (steps < 2) throw std::invalid_argument("quadrature needs at least 2 steps");
  if (b.n_modes() != model.n_modes) {
    throw DimensionError("control operator mode count does not match the model");
  }

  const int n = model.n_modes;
  const double dt = horizon / steps;
  Matrix out = Matrix::Zero(n, n);
  Vector decay(n);

  const bool rank_one = b.kind == ControlOperator::Kind::lumped;
  Matrix bbt;
  if (!rank_one) bbt = b.bbt();

  for (int k = 0; k <= steps; ++k) {
    const double s = dt * k;
    const double weight = (k == 0 || k == steps) ? 0.5 * dt : dt;
    for (int m = 1; m <= n; ++m) decay(m - 1) = std::exp(-model.lambda(m) * (horizon - s));
    if (rank_one) {
      Vector v = decay.cwiseProduct(b.matrix.col(0));
      out.noalias() += weight * (v * v.transpose());
    } else {
      out.noalias() += weight * (decay.asDiagonal() * bbt * decay.asDiagonal());
    }
  }

  Gramian gram;
  gram.matrix = 0.5 * (out + out.transpose());
  gram.horizon = horizon;
  gram.provenance = Gramian::Provenance::quadrature;
  gram.steps = steps;
  return gram;
}

}  // namespace fapc
