#include "kflow/lab/compare.hpp"

#include <algorithm>
#include <cmath>

namespace kflow::lab {

double ricci_flat_sup(const HermitianField& g, const SampleMask& mask) {
  const HermitianField ric = ricci_form(ma_density(g));
  double sup = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask.keeps(i)) continue;
    sup = std::max(sup, std::abs(ric.d11[i]));
    if (g.n() == 2) {
      sup = std::max({sup, std::abs(ric.d22[i]), std::abs(ric.re12[i]), std::abs(ric.im12[i])});
    }
  }
  return sup;
}

CompareReport compare_limit(const std::vector<Checkpoint>& checkpoints, const ScalarField& psi,
                            const ScalarField& Omega, const SampleMask& mask,
                            const HermitianField* final_metric) {
  CompareReport report;
  const ScalarField psi_n = normalize_u(psi, Omega);
  const double w = Omega.grid().weight();

  for (const Checkpoint& ck : checkpoints) {
    const ScalarField d = normalize_u(ck.phi, Omega) - psi_n;
    CheckpointDistance cd;
    cd.t = ck.t;
    double l2 = 0.0;
    double l2_masked = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double a = std::abs(d[i]);
      cd.sup = std::max(cd.sup, a);
      l2 += a * a;
      if (mask.keeps(i)) {
        cd.sup_masked = std::max(cd.sup_masked, a);
        l2_masked += a * a;
      }
    }
    cd.l2 = std::sqrt(l2 * w);
    cd.l2_masked = std::sqrt(l2_masked * w);
    report.distances.push_back(cd);
  }

  if (!checkpoints.empty()) {
    const ScalarField d = normalize_u(checkpoints.back().phi, Omega) - psi_n;
    double l1 = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) l1 += std::abs(d[i]);
    report.l1_final = l1 * w;
  }

  std::vector<std::pair<double, double>> series;
  for (const CheckpointDistance& cd : report.distances) {
    series.emplace_back(cd.t, std::max(cd.l2_masked, kSeriesFloor));
  }
  try {
    report.rate_fit = exp_rate_fit(series, kRateWindowLo, kRateWindowHi);
  } catch (const std::invalid_argument&) {
    report.rate_fit.reset();
  }

  for (std::size_t k = 1; k < report.distances.size(); ++k) {
    const CheckpointDistance& a = report.distances[k - 1];
    const CheckpointDistance& b = report.distances[k];
    if (a.t < kRateWindowLo) continue;
    const double excess = b.l2_masked - a.l2_masked;
    report.monotone_excess = std::max(report.monotone_excess, excess);
  }
  report.monotone = report.monotone_excess <= kMonotoneTol;

  if (final_metric != nullptr) report.ricci_flat_sup = ricci_flat_sup(*final_metric, mask);
  return report;
}

}  // namespace kflow::lab
