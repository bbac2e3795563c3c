#include "apseq/ap_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apseq/errors.hpp"
#include "apseq/parallel.hpp"

namespace apseq {

namespace {

double kappa_power(const Seminorm& kappa, const Vector& v, double p) {
  const double value = kappa(v);
  return p == 1.0 ? value : std::pow(value, p);
}

}  // namespace

double translation_defect(const BiSequence& f, const Seminorm& kappa, long tau, Window k_window) {
  k_window.require_valid("translation_defect");
  double worst = 0.0;
  for (long k = k_window.lo; k <= k_window.hi; ++k) worst = std::max(worst, kappa(f(k + tau) - f(k)));
  return worst;
}

APReport bohr_check(const BiSequence& f, const Seminorm& kappa, double epsilon, Window k_window,
                    Window tau_range, long L, unsigned threads) {
  k_window.require_valid("bohr_check k_window");
  tau_range.require_valid("bohr_check tau_range");
  if (L < 1) throw InputContractError("bohr_check: L must be >= 1");
  if (tau_range.hi - tau_range.lo < L) {
    throw InputContractError("bohr_check: tau_range is shorter than L");
  }
  if (!(epsilon >= 0.0)) throw InputContractError("bohr_check: epsilon must be >= 0");

  // One pass over every value the scan can touch.
  const Window span{k_window.lo + std::min(0L, tau_range.lo), k_window.hi + std::max(0L, tau_range.hi)};
  const std::vector<Vector> values = sample(f, span);
  auto at = [&](long k) -> const Vector& { return values[static_cast<std::size_t>(k - span.lo)]; };

  std::vector<double> defect(tau_range.size());
  parallel_for(defect.size(), threads, [&](std::size_t i) {
    const long tau = tau_range.lo + static_cast<long>(i);
    double worst = 0.0;
    for (long k = k_window.lo; k <= k_window.hi; ++k) worst = std::max(worst, kappa(at(k + tau) - at(k)));
    defect[i] = worst;
  });

  APReport report;
  report.epsilon = epsilon;
  report.seminorm_label = kappa.label();
  for (std::size_t i = 0; i < defect.size(); ++i) {
    if (defect[i] <= epsilon) report.translation_numbers.push_back(tau_range.lo + static_cast<long>(i));
  }

  double max_defect = 0.0;
  for (long t = tau_range.lo; t + L <= tau_range.hi; ++t) {
    const auto first = defect.begin() + (t - tau_range.lo);
    max_defect = std::max(max_defect, *std::min_element(first, first + L + 1));
  }
  report.max_defect = max_defect;
  report.verdict = max_defect <= epsilon;
  if (report.verdict) report.witness_L = L;
  return report;
}

double weyl_distance(const BiSequence& f, const BiSequence& poly, const Seminorm& kappa, double p, long l,
                     Window s_range) {
  if (l < 1) throw InputContractError("weyl_distance: l must be >= 1");
  s_range.require_valid("weyl_distance s_range");
  if (f.dim() != poly.dim()) throw ShapeError("weyl_distance: dimension mismatch");

  const Window span{s_range.lo, s_range.hi + l};
  std::vector<double> terms;
  terms.reserve(span.size());
  for (long j = span.lo; j <= span.hi; ++j) terms.push_back(kappa_power(kappa, f(j) - poly(j), p));

  double best = 0.0;
  for (long s = s_range.lo; s <= s_range.hi; ++s) {
    double acc = 0.0;
    for (long j = s; j <= s + l; ++j) acc += terms[static_cast<std::size_t>(j - span.lo)];
    best = std::max(best, acc / static_cast<double>(l));
  }
  return best;
}

BesicovitchReport besicovitch_distance(const BiSequence& f, const BiSequence& poly, const Seminorm& kappa,
                                       double p, const std::vector<long>& l_grid) {
  if (l_grid.empty()) throw InputContractError("besicovitch_distance: l_grid must be nonempty");
  for (std::size_t i = 0; i < l_grid.size(); ++i) {
    if (l_grid[i] < 1 || (i > 0 && l_grid[i] <= l_grid[i - 1])) {
      throw InputContractError("besicovitch_distance: l_grid must be positive and strictly increasing");
    }
  }
  if (f.dim() != poly.dim()) throw ShapeError("besicovitch_distance: dimension mismatch");

  const long l_max = l_grid.back();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(2 * l_max + 1));
  for (long j = -l_max; j <= l_max; ++j) terms.push_back(kappa_power(kappa, f(j) - poly(j), p));
  auto term = [&](long j) { return terms[static_cast<std::size_t>(j + l_max)]; };

  BesicovitchReport report;
  report.p = p;
  for (const long l : l_grid) {
    // symmetric accumulation from the centre outwards
    double acc = term(0);
    for (long j = 1; j <= l; ++j) acc += term(j) + term(-j);
    report.values_by_l.emplace_back(l, acc / static_cast<double>(l));
  }

  const std::size_t n = report.values_by_l.size();
  const std::size_t quartile = (n + 3) / 4;
  double est = 0.0;
  for (std::size_t i = n - quartile; i < n; ++i) est = std::max(est, report.values_by_l[i].second);
  report.limsup_estimate = est;
  return report;
}

double omega_c_check(const BiSequence& f, long omega, Scalar c, const SeminormFamily& family, Window k_window) {
  if (omega < 1) throw InputContractError("omega_c_check: omega must be positive");
  k_window.require_valid("omega_c_check");
  double worst = 0.0;
  for (long k = k_window.lo; k <= k_window.hi; ++k) {
    const Vector diff = f(k + omega) - c * f(k);
    for (const auto& kappa : family) worst = std::max(worst, kappa(diff));
  }
  return worst;
}

Vector bohr_fourier_coefficient(const BiSequence& f, double lambda, long N) {
  if (N < 1) throw InputContractError("bohr_fourier_coefficient: N must be >= 1");
  Vector acc = Vector::Zero(f.dim());
  for (long k = -N; k <= N; ++k) acc += f(k) * std::polar(1.0, -lambda * static_cast<double>(k));
  return acc / static_cast<double>(2 * N + 1);
}

TrigPoly fit_trig_poly(const BiSequence& f, const std::vector<double>& frequencies, long N) {
  if (frequencies.empty()) throw InputContractError("fit_trig_poly: frequency list must be nonempty");
  TrigPoly poly;
  for (const double lambda : frequencies) poly.terms.push_back({lambda, bohr_fourier_coefficient(f, lambda, N)});
  return poly;
}

}  // namespace apseq
