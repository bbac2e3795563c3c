#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "apseq/seq_core.hpp"

namespace apseq {

/// Per-seminorm bound certificate: kappa(A(k) x) <= at(k) * kappa(x) and at(k) <= sup_bound.
struct Certificate {
  std::function<double(long)> at;
  double sup_bound = 0.0;
  /// Set when at(k + period) == at(k) for all k.
  std::optional<long> period;
};

/// Smallest c with kappa(M x) <= c kappa(x) for all x, or a sound upper bound where the
/// exact value is not computable in closed form (p-norms with p not in {1, 2}; product seminorms).
double induced_bound(const Matrix& m, const Seminorm& kappa);

/// Operator sequence k -> A(k) with attached bound certificates. Immutable; copies share state.
class OperatorSequence {
 public:
  static OperatorSequence constant(Matrix m);
  static OperatorSequence periodic(std::vector<Matrix> ms);
  /// Pure rule; `period` declares A(k + period) == A(k) when known.
  static OperatorSequence generator(Index dim, std::function<Matrix(long)> rule,
                                    std::optional<long> period = std::nullopt);
  /// A(k) = sum_j M_j exp(i lambda_j k).
  static OperatorSequence trig(std::vector<std::pair<double, Matrix>> terms);

  [[nodiscard]] Matrix at(long k) const;
  [[nodiscard]] Vector apply(long k, const Vector& x) const;
  [[nodiscard]] Index dim() const;
  /// 1 for constant, omega for periodic, declared period for generators.
  [[nodiscard]] std::optional<long> period() const;

  [[nodiscard]] OperatorSequence with_certificate(const std::string& label, Certificate cert) const;

  /// Attaches induced_bound certificates for every member of the family. Constant and
  /// periodic backends are tabulated exactly; trig backends take sup_bound = sum_j c(M_j);
  /// other generators need `sup_bounds` for every label.
  [[nodiscard]] OperatorSequence certified(const SeminormFamily& family,
                                           const std::map<std::string, double>& sup_bounds = {}) const;

  [[nodiscard]] bool has_certificate(const std::string& label) const;
  /// Throws InputContractError when the label has no certificate.
  [[nodiscard]] const Certificate& certificate(const std::string& label) const;
  [[nodiscard]] std::vector<std::string> certificate_labels() const;

 private:
  struct Backend;
  OperatorSequence(std::shared_ptr<const Backend> backend, std::map<std::string, Certificate> certs);

  std::shared_ptr<const Backend> backend_;
  std::map<std::string, Certificate> certs_;
};

/// k -> A(k) B(k), certificates multiplied label-wise (submultiplicativity).
OperatorSequence compose(const OperatorSequence& a, const OperatorSequence& b);

Vector op_apply(const OperatorSequence& a, long k, const Vector& x);

/// A(k-1) A(k-2) ... A(k-v) x, applied right to left as matrix-vector products.
Vector op_product_apply(const OperatorSequence& a, long k, long v, const Vector& x);

struct RacCertificate {
  std::string seminorm_label;
  long k = 0;
  /// (V, sum_{v=1}^{V} prod_{i=1}^{v} c(k-i)) for V = 1, 2, ...
  std::vector<std::pair<long, double>> partial_sums;
  /// Certified bound on sum_{v>V} prod_{i=1}^{v} c(k-i) at the last recorded V.
  std::optional<double> tail_bound;
  bool converged = false;

  [[nodiscard]] long depth() const { return partial_sums.empty() ? 0 : partial_sums.back().first; }
};

inline constexpr long kDefaultVMax = 10000;
inline constexpr double kDefaultRacTol = 1e-12;

/// Accumulates the backward product sums of the certificate at k until the tail is below
/// tol. Geometric tail when sup_bound < 1, exact per-period tail for periodic certificates,
/// otherwise 10 consecutive increments below tol (converged, tail absent).
RacCertificate rac_certify(const OperatorSequence& a, const std::string& label, long k,
                           long v_max = kDefaultVMax, double tol = kDefaultRacTol);

}  // namespace apseq
