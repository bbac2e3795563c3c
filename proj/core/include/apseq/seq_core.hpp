#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace apseq {

using Scalar = std::complex<double>;
/// Element of the finite-dimensional state space (the stand-in for Y).
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

/// Closed integer interval [lo, hi].
struct Window {
  long lo = 0;
  long hi = 0;

  [[nodiscard]] bool valid() const { return lo <= hi; }
  [[nodiscard]] std::size_t size() const { return valid() ? static_cast<std::size_t>(hi - lo + 1) : 0; }
  [[nodiscard]] bool contains(long k) const { return lo <= k && k <= hi; }
  /// Throws InputContractError when lo > hi.
  void require_valid(const char* what) const;

  friend bool operator==(const Window&, const Window&) = default;
};

enum class SeminormKind { sup, p_norm, stencil, product };

struct StencilTap {
  long offset = 0;
  Scalar weight{};
};

/// A seminorm on C^d. Stencil seminorms apply a zero-extended difference stencil
/// and then take the sup; product seminorms sum a base seminorm over p blocks.
class Seminorm {
 public:
  static Seminorm sup(std::string label = "sup");
  static Seminorm p_norm(double p, std::string label);
  static Seminorm stencil(std::vector<StencilTap> taps, std::string label);
  /// kappa(y_1,...,y_p) = kappa(y_1) + ... + kappa(y_p) on C^{p d}.
  static Seminorm product(const Seminorm& base, Index blocks, std::string label = {});

  double operator()(const Vector& x) const;

  [[nodiscard]] SeminormKind kind() const { return kind_; }
  [[nodiscard]] const std::string& label() const { return label_; }
  [[nodiscard]] double p() const { return p_; }
  [[nodiscard]] const std::vector<StencilTap>& taps() const { return taps_; }
  [[nodiscard]] Index blocks() const { return blocks_; }
  /// Base seminorm of a product seminorm; throws for other kinds.
  [[nodiscard]] const Seminorm& base() const;

  /// Dense d x d matrix S with (S x)_i = sum_j w_j x_{i+o_j} (zero outside [0, d)).
  [[nodiscard]] Matrix stencil_matrix(Index d) const;

 private:
  Seminorm() = default;

  SeminormKind kind_ = SeminormKind::sup;
  std::string label_;
  double p_ = 1.0;
  std::vector<StencilTap> taps_;
  Index blocks_ = 1;
  std::shared_ptr<const Seminorm> base_;
};

/// Finite family of seminorms standing in for the topology of a locally convex space.
class SeminormFamily {
 public:
  /// Throws InputContractError if empty, labels repeat, or some basis vector of
  /// C^dim is annihilated by every member (not separating).
  SeminormFamily(std::vector<Seminorm> seminorms, Index dim);

  [[nodiscard]] const std::vector<Seminorm>& seminorms() const { return seminorms_; }
  [[nodiscard]] Index dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return seminorms_.size(); }
  [[nodiscard]] auto begin() const { return seminorms_.begin(); }
  [[nodiscard]] auto end() const { return seminorms_.end(); }
  [[nodiscard]] const Seminorm& at(const std::string& label) const;

  /// Product family on C^{blocks * dim}.
  [[nodiscard]] SeminormFamily lifted(Index blocks) const;

 private:
  std::vector<Seminorm> seminorms_;
  Index dim_;
};

struct TrigTerm {
  double frequency = 0.0;  // radians per step
  Vector coefficient;
};

/// P(k) = sum_j y_j exp(i lambda_j k).
struct TrigPoly {
  std::vector<TrigTerm> terms;

  [[nodiscard]] Index dim() const;
  Vector operator()(long k) const;
};

enum class Extension { none, zero, periodic };

/// Immutable Z-indexed C^d-valued sequence; derived sequences are lazy views.
class BiSequence {
 public:
  static BiSequence table(long k_min, std::vector<Vector> values, Extension ext = Extension::none);
  static BiSequence generator(Index dim, std::function<Vector(long)> rule);
  static BiSequence trig_poly(TrigPoly poly);
  /// F(q*omega + r) = c^q * base[r] for 0 <= r < omega.
  static BiSequence omega_c(std::vector<Vector> base, long omega, Scalar c);
  static BiSequence constant(Vector value);
  static BiSequence zero(Index dim);

  /// Throws RangeError outside the stored window of a bare table.
  Vector operator()(long k) const;
  [[nodiscard]] Index dim() const;
  /// Stored index range of a table backend.
  [[nodiscard]] std::optional<Window> stored_window() const;

 private:
  struct Impl;
  explicit BiSequence(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

Vector seq_eval(const BiSequence& f, long k);

/// Pointwise alpha F + beta G.
BiSequence seq_axpy(Scalar alpha, const BiSequence& f, Scalar beta, const BiSequence& g);

/// G(k) = F(k + tau).
BiSequence seq_shift(const BiSequence& f, long tau);

/// Pointwise vector-valued sequence (F_1, ..., F_m) on the product space.
BiSequence seq_stack(std::span<const BiSequence> parts);

/// Sum of component seminorm values.
double product_seminorm(std::span<const std::pair<Seminorm, Vector>> parts);

/// Evaluates F on every k of the window.
std::vector<Vector> sample(const BiSequence& f, Window w);

/// Integer power c^n for any sign of n, by repeated squaring.
Scalar ipow(Scalar c, long n);

/// CSV with header k,re_0,im_0,...; numbers as %.16e.
void write_csv(std::ostream& out, const BiSequence& f, Window w);
/// Parses write_csv output into a table sequence (rows must be consecutive in k).
BiSequence read_csv(std::istream& in, Extension ext = Extension::none);

/// Reciprocal condition estimate of an LU factorisation, 0 when a pivot vanishes (Eigen's
/// estimator alone can report 1 for exactly singular input) or the estimate is not finite.
double reciprocal_condition(const Eigen::PartialPivLU<Matrix>& lu);

/// 17 significant digits, lowercase scientific; used by every CSV writer.
std::string format_double(double v);

}  // namespace apseq
