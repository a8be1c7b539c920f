#include "kflow/linearized_operator.hpp"

#include <cmath>

#include "kflow/kahler_forms.hpp"
#include "kflow/spectral.hpp"

namespace kflow {

namespace {

using spectral::Wavenumber;

double dot(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void remove_mean(ScalarField& f) { f += -f.mean(); }

// Inverse of the constant-coefficient symbol shift + sum_j abar_jj |k_j|^2 pi^2.
ScalarField precondition(const LinearizedMA& op, double shift, const ScalarField& r) {
  const spectral::Spectrum spec(r);
  const bool two = op.grid().complex_dim() == 2;
  const double a11 = op.mean_adj11();
  const double a22 = op.mean_adj22();
  return spec.apply([&](const Wavenumber& w) {
    // -1/4 (d_xx + d_yy) has symbol pi^2 (kx^2 + ky^2) with kappa in cycles.
    double sym = shift;
    sym -= 0.25 * a11 * (spectral::second_symbol(w, 0, 0) + spectral::second_symbol(w, 1, 1));
    if (two) {
      sym -= 0.25 * a22 * (spectral::second_symbol(w, 2, 2) + spectral::second_symbol(w, 3, 3));
    }
    return std::complex<double>(sym > 0.0 ? 1.0 / sym : 0.0, 0.0);
  });
}

template <class Apply>
CgResult pcg(const LinearizedMA& op, double shift, ScalarField b, bool project, Apply&& apply_k,
             const CgOptions& options) {
  if (project) remove_mean(b);
  const double b_norm = std::sqrt(dot(b, b));
  CgResult out{ScalarField(b.grid()), 0, 0.0, true};
  if (b_norm == 0.0) return out;

  ScalarField r = b;
  ScalarField z = precondition(op, shift, r);
  if (project) remove_mean(z);
  ScalarField p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= options.max_iter; ++it) {
    ScalarField kp = apply_k(p);
    const double pkp = dot(p, kp);
    if (!(pkp > 0.0)) {
      out.converged = false;
      out.iterations = it;
      break;
    }
    const double alpha = rz / pkp;
    out.x.axpy(alpha, p);
    r.axpy(-alpha, kp);
    if (project) remove_mean(r);
    out.iterations = it;
    out.relative_residual = std::sqrt(dot(r, r)) / b_norm;
    if (out.relative_residual <= options.rel_tol) {
      out.converged = true;
      break;
    }
    z = precondition(op, shift, r);
    if (project) remove_mean(z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    p *= beta;
    p += z;
    out.converged = false;
  }
  if (project) remove_mean(out.x);
  return out;
}

// Right-preconditioned BiCGSTAB for the nonsymmetric n = 2 operator.
template <class Apply>
CgResult bicgstab(const LinearizedMA& op, double shift, ScalarField b, bool project, Apply&& apply_k,
                  const CgOptions& options) {
  if (project) remove_mean(b);
  const double b_norm = std::sqrt(dot(b, b));
  CgResult out{ScalarField(b.grid()), 0, 0.0, true};
  if (b_norm == 0.0) return out;

  const auto prec = [&](const ScalarField& v) {
    ScalarField z = precondition(op, shift, v);
    if (project) remove_mean(z);
    return z;
  };
  ScalarField r = b;
  const ScalarField r_hat = b;
  ScalarField p(b.grid());
  ScalarField v(b.grid());
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  out.converged = false;
  for (int it = 1; it <= options.max_iter; ++it) {
    out.iterations = it;
    const double rho_next = dot(r_hat, r);
    if (rho_next == 0.0) break;
    const double beta = (rho_next / rho) * (alpha / omega);
    rho = rho_next;
    p.axpy(-omega, v);
    p *= beta;
    p += r;
    const ScalarField p_hat = prec(p);
    v = apply_k(p_hat);
    const double rv = dot(r_hat, v);
    if (rv == 0.0) break;
    alpha = rho / rv;
    ScalarField s = r;
    s.axpy(-alpha, v);
    out.x.axpy(alpha, p_hat);
    out.relative_residual = std::sqrt(dot(s, s)) / b_norm;
    if (out.relative_residual <= options.rel_tol) {
      out.converged = true;
      break;
    }
    const ScalarField s_hat = prec(s);
    const ScalarField t = apply_k(s_hat);
    const double tt = dot(t, t);
    if (tt == 0.0) break;
    omega = dot(t, s) / tt;
    out.x.axpy(omega, s_hat);
    r = std::move(s);
    r.axpy(-omega, t);
    out.relative_residual = std::sqrt(dot(r, r)) / b_norm;
    if (out.relative_residual <= options.rel_tol) {
      out.converged = true;
      break;
    }
    if (omega == 0.0) break;
  }
  if (project) remove_mean(out.x);
  return out;
}

template <class Apply>
CgResult krylov(const LinearizedMA& op, double shift, const ScalarField& b, bool project,
                Apply&& apply_k, const CgOptions& options) {
  if (op.grid().complex_dim() == 1) return pcg(op, shift, b, project, apply_k, options);
  return bicgstab(op, shift, b, project, apply_k, options);
}

}  // namespace

LinearizedMA::LinearizedMA(const HermitianField& g) : g_(g) {
  if (g_.n() == 2) {
    // adj(g)_11 = g22, adj(g)_22 = g11
    const HermitianMatrix m = g_.mean();
    mean_adj11_ = m.a22;
    mean_adj22_ = m.a11;
  }
}

ScalarField LinearizedMA::apply(const ScalarField& x) const {
  if (g_.n() == 1) return trace_hessian(x);
  return mixed_density(g_, complex_hessian(x));
}

CgResult solve_shifted(const LinearizedMA& op, const ScalarField& weight, const ScalarField& rhs,
                       const CgOptions& options) {
  const double shift = weight.mean();
  return krylov(
      op, shift, rhs, false,
      [&](const ScalarField& p) {
        ScalarField out = weight * p;
        out -= op.apply(p);
        return out;
      },
      options);
}

CgResult solve_mean_zero(const LinearizedMA& op, const ScalarField& rhs, const CgOptions& options) {
  return krylov(
      op, 0.0, rhs, true,
      [&](const ScalarField& p) {
        ScalarField out = op.apply(p);
        out *= -1.0;
        remove_mean(out);
        return out;
      },
      options);
}

}  // namespace kflow
