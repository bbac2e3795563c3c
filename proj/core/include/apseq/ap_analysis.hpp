#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "apseq/seq_core.hpp"

namespace apseq {

/// Outcome of a finite-window Bohr almost-periodicity scan.
struct APReport {
  double epsilon = 0.0;
  std::string seminorm_label;
  bool verdict = false;
  /// Length L of the searched intervals [t, t+L]; absent when the verdict is false.
  std::optional<long> witness_L;
  /// Every tau of the scanned range with sup_k kappa(F(k+tau)-F(k)) <= epsilon.
  std::vector<long> translation_numbers;
  /// max over t of min over tau in [t, t+L] of the translation defect.
  double max_defect = 0.0;
};

struct BesicovitchReport {
  double p = 1.0;
  std::vector<std::pair<long, double>> values_by_l;
  /// max over the top quartile (by l) of values_by_l.
  double limsup_estimate = 0.0;
};

/// Default l grid for the limsup estimator.
inline const std::vector<long> kDefaultLGrid{64, 128, 256, 512};

/// Sup over k_window of kappa(F(k+tau) - F(k)).
double translation_defect(const BiSequence& f, const Seminorm& kappa, long tau, Window k_window);

/// Scans every tau in tau_range; for each t with [t, t+L] inside tau_range looks for a
/// tau in [t, t+L] whose translation defect is <= epsilon.
APReport bohr_check(const BiSequence& f, const Seminorm& kappa, double epsilon, Window k_window,
                    Window tau_range, long L, unsigned threads = 1);

/// max over s in s_range of l^{-1} sum_{j=s}^{s+l} kappa(F(j)-P(j))^p.
double weyl_distance(const BiSequence& f, const BiSequence& poly, const Seminorm& kappa, double p, long l,
                     Window s_range);

/// l^{-1} sum_{j=-l}^{l} kappa(F(j)-P(j))^p for each l in the (increasing) grid.
BesicovitchReport besicovitch_distance(const BiSequence& f, const BiSequence& poly, const Seminorm& kappa,
                                       double p, const std::vector<long>& l_grid = kDefaultLGrid);

/// max over k_window and the family of kappa(F(k+omega) - c F(k)).
double omega_c_check(const BiSequence& f, long omega, Scalar c, const SeminormFamily& family, Window k_window);

/// (2N+1)^{-1} sum_{k=-N}^{N} F(k) exp(-i lambda k).
Vector bohr_fourier_coefficient(const BiSequence& f, double lambda, long N);

/// Trigonometric polynomial with the empirical Bohr coefficients at the given frequencies.
TrigPoly fit_trig_poly(const BiSequence& f, const std::vector<double>& frequencies, long N);

}  // namespace apseq
