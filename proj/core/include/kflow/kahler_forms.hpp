#pragma once

// Closed (1,1)-forms on the flat torus, represented exactly as a constant
// Hermitian matrix (the cohomology class) plus the complex Hessian of a
// mean-zero potential.

#include <stdexcept>

#include "kflow/hermitian.hpp"
#include "kflow/torus_geometry.hpp"

namespace kflow {

class FormError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Background {
  HermitianMatrix A;
  ScalarField potential;

  /// Validates dimensions and |mean(potential)| <= 1e-13.
  Background(HermitianMatrix a, ScalarField psi0);
  /// Flat form A on `grid`.
  Background(const Grid& grid, HermitianMatrix a);

  const Grid& grid() const { return potential.grid(); }
};

Background operator+(const Background& a, const Background& b);
Background operator-(const Background& a, const Background& b);
Background operator*(double s, const Background& a);

/// The reference family omega_t = omega_inf + e^{-t} chi with chi = omega_0 - omega_inf.
struct Pencil {
  Background omega0;
  Background omega_inf;
  Background chi;
  /// Target volume density, positive with mean 1.
  ScalarField Omega;

  const Grid& grid() const { return Omega.grid(); }
  int n() const { return Omega.grid().complex_dim(); }
};

struct PencilOptions {
  /// Require det(A_inf) = 1 within 1e-12.
  bool unit_limit_class = true;
};

/// Builds the pencil and checks: mean(Omega) = 1 within 1e-12, Omega > 0,
/// omega_0 positive definite at every sample, optionally det(A_inf) = 1.
Pencil make_pencil(Background omega0, Background omega_inf, ScalarField Omega,
                   PencilOptions options = {});

Background reference_form_at(const Pencil& pencil, double t);

/// Coefficient field A + H(psi0 + phi).
HermitianField metric_field(const Background& bg, const ScalarField& phi);
HermitianField metric_field(const Background& bg);

/// Pointwise determinant (the Monge-Ampere density under the unit-volume normalization).
ScalarField ma_density(const HermitianField& g);

ScalarField min_eigenvalue_field(const HermitianField& g);

/// [omega]^n = det(A); independent of any potential.
double class_volume(const Background& bg);

/// n [A][B]^{n-1} for constant representatives.
double mixed_class_pairing(const HermitianMatrix& a, const HermitianMatrix& b);

/// Pointwise tr(adj(g) x), the derivative of det(g + s x) at s = 0.
ScalarField mixed_density(const HermitianField& g, const HermitianField& x);

/// Ricci form coefficients of a positive density F: -H(log F).
HermitianField ricci_form(const ScalarField& density);

}  // namespace kflow
