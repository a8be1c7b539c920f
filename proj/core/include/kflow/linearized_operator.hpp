#pragma once

// Linearization of the Monge-Ampere density and matrix-free Krylov solvers
// for the shifted systems built on it.
//
// For a metric g = A + H(phi) the derivative of det(g + H x) in x is
// L_g x = tr(adj(g) H x), applied with the same spectral Hessian as the
// density itself so that Newton and Rosenbrock see the exact discrete
// Jacobian. For n = 1 this is the constant-coefficient operator Laplacian/4
// and the systems are solved by PCG. For n = 2 the discrete operator is only
// symmetric up to aliasing, so BiCGSTAB is used with the same preconditioner.

#include "kflow/torus_geometry.hpp"

namespace kflow {

class LinearizedMA {
 public:
  explicit LinearizedMA(const HermitianField& g);

  const Grid& grid() const { return g_.grid(); }
  const HermitianField& metric() const { return g_; }

  /// L_g x.
  ScalarField apply(const ScalarField& x) const;

  /// Grid mean of the diagonal of adj(g), used by the spectral preconditioner.
  double mean_adj11() const { return mean_adj11_; }
  double mean_adj22() const { return mean_adj22_; }

 private:
  HermitianField g_;
  double mean_adj11_ = 1.0;
  double mean_adj22_ = 1.0;
};

struct CgOptions {
  double rel_tol = 1e-12;
  int max_iter = 1000;
};

struct CgResult {
  ScalarField x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Solves weight * x - L_g x = rhs with weight > 0 pointwise.
CgResult solve_shifted(const LinearizedMA& op, const ScalarField& weight, const ScalarField& rhs,
                       const CgOptions& options = {});

/// Solves -L_g x = rhs on mean-zero fields; rhs is projected to mean zero first.
CgResult solve_mean_zero(const LinearizedMA& op, const ScalarField& rhs,
                         const CgOptions& options = {});

}  // namespace kflow
