#include "fapc/linops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fapc {
namespace {

std::string shape_message(const char* what, long got, long want) {
  std::ostringstream os;
  os << what << ": got " << got << ", expected " << want;
  return os.str();
}

// Refines x in place against A x = h using an already computed factorization.
// Working-precision refinement: one or two passes are enough to bring a
// well-conditioned solve to its floor, and we stop early on stagnation.
template <typename Factorization>
void refine(const Factorization& fact, const Matrix& a, const Vector& h, Vector& x,
            SolveInfo& info) {
  const double hnorm = h.norm();
  Vector r = h - a * x;
  info.residual = r.norm() / hnorm;
  while (info.residual > 1e-14 && info.refinements < 2) {
    Vector dx = fact.solve(r);
    x += dx;
    r = h - a * x;
    const double next = r.norm() / hnorm;
    if (next >= info.residual) {
      x -= dx;  // refinement stopped paying off; keep the better iterate
      break;
    }
    info.residual = next;
    ++info.refinements;
  }
}

// Symmetric-first solve with a pivoted fallback, reporting which path ran.
Vector solve_checked(const Matrix& a, const Vector& h, SolveInfo* info) {
  SolveInfo local;
  if (h.norm() == 0.0) {
    if (info) *info = local;
    return Vector::Zero(a.rows());
  }

  Eigen::LDLT<Matrix> ldlt(a);
  Vector x;
  if (ldlt.info() == Eigen::Success) {
    x = ldlt.solve(h);
    local.path = SolvePath::symmetric_ldlt;
    refine(ldlt, a, h, x, local);
    if (local.residual <= 1e-10) {
      if (info) *info = local;
      return x;
    }
  }

  local = SolveInfo{};
  Eigen::PartialPivLU<Matrix> lu(a);
  x = lu.solve(h);
  local.path = SolvePath::pivoted_lu;
  refine(lu, a, h, x, local);
  if (local.residual > 1e-10) {
    std::ostringstream os;
    os << "linear solve stalled at relative residual " << local.residual
       << "; matrix is numerically singular";
    throw SolverError(os.str());
  }
  if (info) *info = local;
  return x;
}

// Largest eigenvalue of a symmetric positive semidefinite matrix by power
// iteration. Rayleigh quotients increase monotonically here, so a run of
// consecutive negligible gains means the estimate has settled. Matrices with
// a tight top cluster can crawl slower than any per-step threshold without
// ever resolving the cluster; those hit the iteration cap and finish with a
// dense symmetric solve, which stays cheap at mode-count dimensions.
double top_eigenvalue(const Matrix& t, Vector* warm) {
  const int n = static_cast<int>(t.rows());
  if (n == 0) return 0.0;
  const double scale = t.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if (n == 1) return t(0, 0);

  Vector v;
  if (warm != nullptr && warm->size() == n && warm->norm() > 0.0) {
    v = *warm;
  } else {
    // deterministic start with no special symmetry
    v = Vector::Ones(n);
    for (int i = 0; i < n; ++i) {
      v(i) += (i % 2 == 0 ? 1.0 : -1.0) * (0.25 * (i + 1)) / n;
    }
  }
  v.normalize();

  double lam = v.dot(t * v);
  int calm = 0;
  for (int it = 0; it < 10000; ++it) {
    Vector w = t * v;
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    const double next = v.dot(t * v);
    calm = std::abs(next - lam) <= 1e-10 * std::max(std::abs(next), 1e-300) ? calm + 1 : 0;
    lam = next;
    if (calm >= 3) {
      if (warm != nullptr) *warm = v;
      return lam;
    }
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(t);
  if (es.info() != Eigen::Success) {
    throw SolverError("operator norm estimation did not converge");
  }
  if (warm != nullptr) *warm = es.eigenvectors().col(n - 1);
  return es.eigenvalues()(n - 1);
}

}  // namespace

Subspace Subspace::from_basis(Matrix basis) {
  if (basis.rows() < basis.cols()) {
    throw DimensionError(shape_message("subspace basis has more columns than rows",
                                       basis.cols(), basis.rows()));
  }
  if (basis.cols() > 0) {
    Matrix gram = basis.transpose() * basis;
    gram -= Matrix::Identity(basis.cols(), basis.cols());
    if (gram.cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("subspace basis columns are not orthonormal");
    }
  }
  return Subspace(std::move(basis));
}

Subspace Subspace::leading_modes(int ambient, int m) {
  if (ambient < 1 || m < 0 || m > ambient) {
    throw DimensionError(shape_message("leading-mode subspace dimension", m, ambient));
  }
  Matrix basis = Matrix::Zero(ambient, m);
  for (int i = 0; i < m; ++i) basis(i, i) = 1.0;
  return Subspace(std::move(basis));
}

Vector Subspace::project(const Vector& h) const {
  if (h.size() != basis_.rows()) {
    throw DimensionError(shape_message("projection input length", h.size(), basis_.rows()));
  }
  if (basis_.cols() == 0) return Vector::Zero(h.size());
  return basis_ * (basis_.transpose() * h);
}

Vector project(const Subspace& sub, const Vector& h) { return sub.project(h); }

Vector resolvent_apply(const Matrix& gram, double eps, const Vector& h, SolveInfo* info) {
  if (gram.rows() != gram.cols()) {
    throw DimensionError(shape_message("gramian is not square", gram.cols(), gram.rows()));
  }
  if (h.size() != gram.rows()) {
    throw DimensionError(shape_message("right-hand side length", h.size(), gram.rows()));
  }
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");

  Matrix a = gram;
  a.diagonal().array() += eps;
  return solve_checked(a, h, info);
}

Vector resolvent_like_apply(const Matrix& gram, double eps, const Subspace& sub,
                            const Vector& h, SolveInfo* info) {
  if (gram.rows() != gram.cols()) {
    throw DimensionError(shape_message("gramian is not square", gram.cols(), gram.rows()));
  }
  if (sub.ambient() != gram.rows()) {
    throw DimensionError(shape_message("subspace ambient dimension", sub.ambient(), gram.rows()));
  }
  if (h.size() != gram.rows()) {
    throw DimensionError(shape_message("right-hand side length", h.size(), gram.rows()));
  }
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");

  if (sub.dim() == 0) return resolvent_apply(gram, eps, h, info);

  const double delta = delta_coercivity(gram, sub);
  if (delta <= kDeltaFloor) {
    std::ostringstream os;
    os << "restricted gramian is numerically singular (delta = " << delta
       << " <= " << kDeltaFloor << ")";
    throw CoercivityError(os.str());
  }

  Matrix a = gram + eps * (Matrix::Identity(gram.rows(), gram.cols()) -
                           sub.basis() * sub.basis().transpose());
  return solve_checked(a, h, info);
}

double delta_coercivity(const Matrix& gram, const Subspace& sub) {
  if (sub.ambient() != gram.rows() || gram.rows() != gram.cols()) {
    throw DimensionError(shape_message("subspace ambient dimension", sub.ambient(), gram.rows()));
  }
  if (sub.dim() == 0) {
    throw DimensionError("coercivity is undefined for an empty subspace; the constraint is vacuous");
  }
  Matrix restricted = sub.basis().transpose() * gram * sub.basis();
  restricted = 0.5 * (restricted + restricted.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(restricted, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("restricted eigenvalue solve failed");
  return std::max(es.eigenvalues().minCoeff(), 0.0);
}

double contraction_norm(const Matrix& gram, double eps, const Subspace& sub) {
  if (sub.ambient() != gram.rows() || gram.rows() != gram.cols()) {
    throw DimensionError(shape_message("subspace ambient dimension", sub.ambient(), gram.rows()));
  }
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (sub.dim() == 0) return 0.0;

  Matrix a = gram;
  a.diagonal().array() += eps;
  Eigen::LDLT<Matrix> ldlt(a);
  Matrix c;
  if (ldlt.info() == Eigen::Success) {
    c = ldlt.solve(sub.basis());
  } else {
    c = Eigen::PartialPivLU<Matrix>(a).solve(sub.basis());
  }
  // The squared norm of eps (eps I + G)^{-1} pi_M is the top eigenvalue of
  // eps^2 C^T C with C the resolvent image of the basis.
  Matrix t = (eps * eps) * (c.transpose() * c);
  t = 0.5 * (t + t.transpose());
  return std::sqrt(std::max(top_eigenvalue(t, nullptr), 0.0));
}

double factorization_residual(const Matrix& gram, double eps, const Subspace& sub,
                              const Vector& h) {
  const double hnorm = h.norm();
  if (hnorm == 0.0) return 0.0;

  Vector left = resolvent_like_apply(gram, eps, sub, h);

  Vector right;
  if (sub.dim() == 0) {
    right = resolvent_apply(gram, eps, h);
  } else {
    const long n = gram.rows();
    Matrix a = gram;
    a.diagonal().array() += eps;
    Eigen::LDLT<Matrix> ldlt(a);
    Matrix w;
    Vector r;
    if (ldlt.info() == Eigen::Success) {
      w = ldlt.solve(sub.basis());
      r = ldlt.solve(h);
    } else {
      Eigen::PartialPivLU<Matrix> lu(a);
      w = lu.solve(sub.basis());
      r = lu.solve(h);
    }
    Matrix correction = Matrix::Identity(n, n) - eps * w * sub.basis().transpose();
    Eigen::PartialPivLU<Matrix> lu(correction);
    right = lu.solve(r);
    // one refinement pass keeps the second route at its conditioning floor
    Vector res = r - correction * right;
    right += lu.solve(res);
  }
  return (left - right).norm() / hnorm;
}

std::vector<SweepRow> vanishing_sweep(const Matrix& gram, const Subspace& sub,
                                      const std::vector<double>& eps_grid, const Vector& h) {
  if (eps_grid.empty()) throw std::invalid_argument("epsilon grid is empty");
  for (size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0)) throw std::invalid_argument("epsilon grid entries must be positive");
    if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) {
      throw std::invalid_argument("epsilon grid must be strictly decreasing");
    }
  }

  std::vector<SweepRow> rows;
  rows.reserve(eps_grid.size());
  for (double eps : eps_grid) {
    SweepRow row;
    row.eps = eps;
    row.contraction = contraction_norm(gram, eps, sub);
    row.resolvent_norm = eps * resolvent_apply(gram, eps, h).norm();
    row.resolvent_like_norm = eps * resolvent_like_apply(gram, eps, sub, h).norm();
    rows.push_back(row);
  }
  return rows;
}

double operator_norm(const Matrix& a, Vector* warm_start) {
  if (a.size() == 0) return 0.0;
  if (a.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Matrix t = a.transpose() * a;
  t = 0.5 * (t + t.transpose());
  return std::sqrt(std::max(top_eigenvalue(t, warm_start), 0.0));
}

bool is_symmetric(const Matrix& a, double tol_scale) {
  if (a.rows() != a.cols()) return false;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol_scale * scale;
}

}  // namespace fapc
