#pragma once

#include <Eigen/Dense>

#include <vector>

#include "fapc/errors.hpp"

namespace fapc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Below this coercivity level the regularized operator eps*(I-P) + G is not
// invertible to working precision and solves are refused.
inline constexpr double kDeltaFloor = 1e-12;

// Orthogonal projection subspace, held as an orthonormal column basis.
// dim() == 0 is legal everywhere and makes the projection the zero map, so
// every "resolvent-like" quantity degenerates to its plain counterpart.
class Subspace {
 public:
  Subspace() = default;

  // Validates that the columns are orthonormal (within 1e-12).
  static Subspace from_basis(Matrix basis);

  // span{e_1, ..., e_m} inside R^ambient.
  static Subspace leading_modes(int ambient, int m);

  int ambient() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }

  Vector project(const Vector& h) const;
  Vector complement(const Vector& h) const { return h - project(h); }

 private:
  explicit Subspace(Matrix b) : basis_(std::move(b)) {}
  Matrix basis_;
};

enum class SolvePath { symmetric_ldlt, pivoted_lu };

struct SolveInfo {
  SolvePath path = SolvePath::symmetric_ldlt;
  double residual = 0.0;  // relative residual of the returned solution
  int refinements = 0;
};

// pi_M h
Vector project(const Subspace& sub, const Vector& h);

// Solves (eps*I + G) x = h. Relative residual is driven below 1e-10 by
// iterative refinement; SolverError otherwise.
Vector resolvent_apply(const Matrix& gram, double eps, const Vector& h,
                       SolveInfo* info = nullptr);

// Solves (eps*(I - pi_M) + G) x = h. Requires delta_coercivity above the
// floor when the subspace is nontrivial.
Vector resolvent_like_apply(const Matrix& gram, double eps, const Subspace& sub,
                            const Vector& h, SolveInfo* info = nullptr);

// Smallest eigenvalue of basis^T G basis, clamped at zero. Undefined (and an
// error) for an empty subspace.
double delta_coercivity(const Matrix& gram, const Subspace& sub);

// Operator 2-norm of eps*(eps*I + G)^{-1} pi_M, strictly below 1 for
// positive semidefinite G. Power iteration on the symmetrized product.
double contraction_norm(const Matrix& gram, double eps, const Subspace& sub);

// |x_left - x_right| / |h| where x_left solves the regularized system in one
// shot and x_right goes through the factored route
// (I - eps*(eps*I+G)^{-1} pi_M)^{-1} (eps*I+G)^{-1} h, each with independent
// factorizations.
double factorization_residual(const Matrix& gram, double eps, const Subspace& sub,
                              const Vector& h);

struct SweepRow {
  double eps = 0.0;
  double contraction = 0.0;          // |eps (eps I + G)^{-1} pi_M|
  double resolvent_norm = 0.0;       // |eps (eps I + G)^{-1} h|
  double resolvent_like_norm = 0.0;  // |eps (eps (I-pi_M) + G)^{-1} h|
};

// Evaluates the three vanishing quantities over a strictly decreasing grid of
// regularization parameters.
std::vector<SweepRow> vanishing_sweep(const Matrix& gram, const Subspace& sub,
                                      const std::vector<double>& eps_grid,
                                      const Vector& h);

// Largest singular value by power iteration on A^T A (relative tolerance
// 1e-10, cap 10000 steps). Full decompositions stay in test oracles; this is
// the in-library norm everywhere. An optional warm-start vector speeds up
// scans over slowly varying matrix families and is updated in place.
double operator_norm(const Matrix& a, Vector* warm_start = nullptr);

// Symmetry gate used when ingesting matrices from files or quadrature.
bool is_symmetric(const Matrix& a, double tol_scale = 1e-12);

}  // namespace fapc
