#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apseq/ap_analysis.hpp"
#include "apseq/operator_model.hpp"
#include "apseq/seq_core.hpp"

namespace apseq {

inline constexpr double kDefaultSolveTol = 1e-10;
inline constexpr long kUniquenessHorizon = 10000;
inline constexpr double kUniquenessTol = 1e-12;
/// Forcing probes above this are treated as unbounded.
inline constexpr double kBoundednessLimit = 1e150;

struct OmegaCRequest {
  long omega = 1;
  Scalar c{1.0, 0.0};
};

struct BohrRequest {
  std::string seminorm_label;
  double epsilon = 0.0;
  Window k_window{-100, 100};
  Window tau_range{-500, 500};
  long L = 1;
};

struct SolveOptions {
  double tol = kDefaultSolveTol;
  long v_max = kDefaultVMax;
  /// 0 means default_threads().
  unsigned threads = 0;
  std::optional<OmegaCRequest> periodicity;
  std::optional<BohrRequest> bohr;
};

struct SolveReport {
  Window window;
  /// Indexed by k - window.lo.
  std::vector<long> truncation_V;
  /// tail_bound[label][k - window.lo]: certified bound on the neglected product sum;
  /// absent when convergence was detected empirically.
  std::map<std::string, std::vector<std::optional<double>>> tail_bound;
  std::map<std::string, double> max_residual;
  std::optional<double> periodicity_defect;
  std::optional<APReport> ap_report;
  /// "certified" or "not certified".
  std::string uniqueness;
  /// sup of kappa(f) over probe_window, per label.
  std::map<std::string, double> f_sup;
  Window probe_window;
  /// sup_bound of the certificate that drove the series, per label.
  std::map<std::string, double> certificate_sup;
  /// Free-form facts added by wrapping solvers (reduction used, cross-checks).
  std::map<std::string, double> diagnostics;
  std::vector<std::string> notes;

  /// max over labels of max_residual.
  [[nodiscard]] double worst_residual() const;
  /// max over labels of certificate_sup.
  [[nodiscard]] double worst_certificate() const;
};

struct Solution {
  /// Tabulated on the window; evaluated from the series on demand elsewhere.
  BiSequence x;
  SolveReport report;
};

/// Bounded solution of x(k+1) = A(k) x(k) + f(k) as the backward series
/// x(k) = f(k-1) + sum_{v>=1} A(k-1)...A(k-v) f(k-1-v), truncated per k so that the
/// certified tail times sup kappa(f) is <= tol for every kappa of the family.
/// Throws ConvergenceError when the certificate sums do not settle within v_max terms and
/// BoundednessError when f is not bounded on [window.lo - v_max - 1, window.hi].
Solution solve_series(const OperatorSequence& A, const BiSequence& f, const SeminormFamily& family, Window window,
                      const SolveOptions& options = {});

/// max over k in window of kappa(x(k+1) - A(k) x(k) - f(k)), per label.
std::map<std::string, double> residual(const OperatorSequence& A, const BiSequence& f, const BiSequence& x,
                                       Window window, const SeminormFamily& family);

/// Exact forward iteration from x(k0) = x0; tabulated on [k0, window.hi + 1].
BiSequence forward_oracle(const OperatorSequence& A, const BiSequence& f, long k0, const Vector& x0, Window window);

/// [prod_{i=1}^{k} c(-i)] for k = 1..K.
std::vector<double> homogeneous_decay(const OperatorSequence& A, const std::string& label, long K);

/// True when the homogeneous products drop below kUniquenessTol within K steps for every
/// certified label of the family.
bool uniqueness_certified(const OperatorSequence& A, const SeminormFamily& family, long K = kUniquenessHorizon);

/// max over window and family of (1+|k|)^{-alpha} kappa(x(k)).
double weighted_growth_check(const BiSequence& x, double alpha, const SeminormFamily& family, Window window);

/// Fills periodicity_defect and ap_report from the options (used by every solver).
void attach_analyses(SolveReport& report, const BiSequence& x, const SeminormFamily& family,
                     const SolveOptions& options);

}  // namespace apseq
