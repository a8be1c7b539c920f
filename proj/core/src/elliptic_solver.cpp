#include "kflow/elliptic_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kflow/spectral.hpp"

namespace kflow {

namespace {

constexpr double kSolvabilityTol = 1e-10;
constexpr double kMinDamping = 0x1p-20;

struct Residual {
  ScalarField density;
  ScalarField r;
  double c = 0.0;
  double sup = 0.0;
};

bool positive(const HermitianField& g) { return min_eigenvalue_field(g).min() > 0.0; }

// r = log(det / Omega) - c with c the det-weighted mean, so that
// integral(det r) = 0 and -L h = det r is solvable.
Residual evaluate(const HermitianField& g, const ScalarField& Omega) {
  Residual out{ma_density(g), ScalarField(Omega.grid()), 0.0, 0.0};
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < out.r.size(); ++i) {
    out.r[i] = std::log(out.density[i] / Omega[i]);
    num += out.density[i] * out.r[i];
    den += out.density[i];
  }
  out.c = num / den;
  out.r += -out.c;
  out.sup = out.r.abs_max();
  return out;
}

void normalize(ScalarField& psi, const ScalarField& Omega) {
  psi += -integrate(psi * Omega) / integrate(Omega);
}

}  // namespace

std::vector<double> degenerate_schedule() { return {1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001}; }

std::vector<double> kahler_schedule() { return {0.0}; }

ScalarField poisson_oracle_n1(const Background& omega_inf, const ScalarField& Omega) {
  if (omega_inf.grid().complex_dim() != 1) {
    throw std::invalid_argument("poisson_oracle_n1: requires complex dimension 1");
  }
  const double mismatch = Omega.mean() - class_volume(omega_inf);
  if (std::abs(mismatch) > kSolvabilityTol) {
    std::ostringstream msg;
    msg << "poisson_oracle_n1: mean(Omega) differs from the class volume by " << mismatch;
    throw SolvabilityError(msg.str());
  }
  ScalarField source = Omega;
  source -= ma_density(metric_field(omega_inf));
  const spectral::Spectrum spec(source);
  ScalarField psi = spec.apply([](const spectral::Wavenumber& w) {
    const double sym = 0.25 * (spectral::second_symbol(w, 0, 0) + spectral::second_symbol(w, 1, 1));
    return std::complex<double>(sym != 0.0 ? 1.0 / sym : 0.0, 0.0);
  });
  normalize(psi, Omega);
  return psi;
}

EllipticSolution newton_ma_solve(const Background& omega_inf, const Background& regularizer,
                                 const ScalarField& Omega, const EllipticOptions& options) {
  if (options.schedule.empty()) throw std::invalid_argument("newton_ma_solve: empty schedule");
  if (!(Omega.min() > 0.0)) throw std::invalid_argument("newton_ma_solve: Omega must be positive");

  EllipticSolution sol{ScalarField(Omega.grid()), 0.0, 0.0, 0.0, 0.0, 0, {}};
  for (std::size_t s = 0; s < options.schedule.size(); ++s) {
    const double delta = options.schedule[s];
    const bool last = s + 1 == options.schedule.size();
    const double tol = last ? options.tol : std::max(options.tol, options.path_tol);
    const Background bg = omega_inf + delta * regularizer;

    HermitianField g = metric_field(bg, sol.psi);
    if (!positive(g)) {
      std::ostringstream msg;
      msg << "newton_ma_solve: starting metric is not positive at delta = " << delta;
      throw PositivityLoss(msg.str());
    }
    Residual res = evaluate(g, Omega);
    if (last) sol.history = {res.sup};

    int it = 0;
    while (res.sup > tol) {
      if (it == options.max_iter) {
        std::ostringstream msg;
        msg << "newton_ma_solve: no convergence after " << it << " iterations at delta = " << delta
            << " (residual " << res.sup << ")";
        throw NonConvergence(msg.str());
      }
      ++it;
      const LinearizedMA op(g);
      const CgResult step = solve_mean_zero(op, res.density * res.r, options.cg);

      double lambda = 1.0;
      for (;;) {
        ScalarField trial = sol.psi;
        trial.axpy(lambda, step.x);
        HermitianField g_trial = metric_field(bg, trial);
        if (positive(g_trial)) {
          Residual res_trial = evaluate(g_trial, Omega);
          if (res_trial.sup < res.sup || lambda <= kMinDamping) {
            sol.psi = std::move(trial);
            g = std::move(g_trial);
            res = std::move(res_trial);
            break;
          }
        } else if (lambda <= kMinDamping) {
          std::ostringstream msg;
          msg << "newton_ma_solve: metric lost positivity at damping " << lambda
              << " (delta = " << delta << ")";
          throw PositivityLoss(msg.str());
        }
        lambda *= 0.5;
      }
      if (last) sol.history.push_back(res.sup);
    }
    sol.iterations += it;
    if (last) {
      sol.residual_sup = res.sup;
      sol.reg_final = delta;
      sol.c_final = res.c;
    }
  }
  normalize(sol.psi, Omega);
  sol.residual_limit = residual(omega_inf, sol.psi, Omega);
  return sol;
}

double residual(const Background& omega_inf, const ScalarField& psi, const ScalarField& Omega,
                const SampleMask* mask) {
  const ScalarField det = ma_density(metric_field(omega_inf, psi));
  double sup = 0.0;
  for (std::size_t i = 0; i < det.size(); ++i) {
    if (mask != nullptr && !mask->keeps(i)) continue;
    if (!(det[i] > 0.0)) return std::numeric_limits<double>::infinity();
    sup = std::max(sup, std::abs(std::log(det[i] / Omega[i])));
  }
  return sup;
}

}  // namespace kflow
