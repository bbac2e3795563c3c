#pragma once

#include <optional>
#include <vector>

#include "apseq/higher_order.hpp"

namespace apseq {

/// Dirichlet finite-difference Laplacian on n interior points per axis.
struct GridLaplacian {
  Index n = 0;
  int dims = 1;
  double h = 1.0;
  /// Dense Delta_h on C^{n^dims}; negative definite.
  Matrix matrix;

  [[nodiscard]] Index size() const { return dims == 1 ? n : n * n; }
  /// Eigenvalues of -Delta_h per axis: (2 - 2 cos(j pi/(n+1))) / h^2, j = 1..n (ascending).
  [[nodiscard]] std::vector<double> axis_eigenvalues() const;
  /// Smallest eigenvalue of -Delta_h.
  [[nodiscard]] double min_eigenvalue() const;
};

inline constexpr Index kMax2dGrid = 32;

GridLaplacian laplacian_1d(Index n, double h);
/// n <= 32.
GridLaplacian laplacian_2d(Index n, double h);

/// Solves (b I - Delta_h) x = y. Tridiagonal elimination in 1D, sine-basis diagonalisation
/// in 2D. DomainError when Re b <= 0.
Vector resolvent_apply(const GridLaplacian& L, Scalar b, const Vector& y);

/// Dense (b I - Delta_h)^{-1}.
Matrix resolvent_matrix(const GridLaplacian& L, Scalar b);

/// ||(b - Delta_h)^{-1}||_2 = 1 / |b + lambda| minimised over the spectrum; for real b this
/// is 1/(b + min_eigenvalue). Never exceeds 1/Re b.
double resolvent_norm_bound(const GridLaplacian& L, Scalar b);

/// Neighbourhood of the solve window on which the builder hypotheses are checked.
inline constexpr long kHypothesisPad = 256;
inline constexpr double kSmallnessLimit = 0.9;

struct HeatInstance {
  DegenerateVbProblem problem;
  /// max over the checked range of sup|m(k)| / Re b(k)
  double certificate_sup = 0.0;
  Window checked;
};

/// m(k+1) u(k+1) = Delta_h u(k) - b(k) u(k) + f(k):
///   B(k) = diag(m(k)), A(k) = Delta_h - b(k) I, C = I.
/// Pass `period` when m and b share it; the hypotheses are then checked over one period.
/// InputContractError (listing k) when Re b(k) <= 0 or the composite certificate exceeds 0.9.
HeatInstance heat_problem(const GridLaplacian& L, const BiSequence& m, const BiSequence& b, const BiSequence& f,
                          const SeminormFamily& family, Window window, std::optional<long> period = std::nullopt);

struct WaveInstance {
  SecondOrderProblem problem;
  double certificate_sup = 0.0;
  Window checked;
};

/// m2(k+2) u(k+2) + m1(k+1) u(k+1) = Delta_h u(k) - b(k) u(k) + f(k):
///   A0(k) = b(k) I - Delta_h, A1 = diag(m1), A2 = diag(m2), C = I.
WaveInstance wave_problem(const GridLaplacian& L, const BiSequence& m1, const BiSequence& m2, const BiSequence& b,
                          const BiSequence& f, const SeminormFamily& family, Window window,
                          std::optional<long> period = std::nullopt);

}  // namespace apseq
