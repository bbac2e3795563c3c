#pragma once

#include <map>
#include <optional>
#include <string>

#include "apseq/first_order_solver.hpp"

namespace apseq {

/// Single-valued continuous D(k) contained in [A(k)]^{-1} C.
struct ResolventSelection {
  OperatorSequence D;
  Matrix C;
  std::string description;
};

/// D(k) = A(k)^{-1} C by LU with partial pivoting; NumericError when rcond < 1e-12 at a
/// sampled k. Certificates come from OperatorSequence::certified (periodic A is tabulated
/// exactly, other generators need sup_bounds).
ResolventSelection selection_from_operator(const OperatorSequence& A_mat, const Matrix& C,
                                           const SeminormFamily& family,
                                           const std::map<std::string, double>& sup_bounds = {});

/// max over the window of ||A(k) D(k) - C||_inf / max(1, ||C||_inf).
double selection_consistency(const OperatorSequence& A_mat, const ResolventSelection& sel, Window window);

/// R(k) = S(-k-1), certificates reflected the same way. Periodic tables stay tables, so
/// reflecting twice gives back bit-identical matrices.
OperatorSequence reflect(const OperatorSequence& s);

/// Solves x(k) = D(k)(x(k+1) - f(k)) through v(k+1) = D(-k-1) v(k) - D(-k-1) f(-k-1), x(k) = v(-k).
Solution solve_inclusion(const ResolventSelection& sel, const BiSequence& f, const SeminormFamily& family,
                         Window window, const SolveOptions& options = {});

/// max over window of kappa(x(k) - D(k) x(k+1) + D(k) f(k)), per label.
std::map<std::string, double> inclusion_residual(const ResolventSelection& sel, const BiSequence& f,
                                                 const BiSequence& x, Window window, const SeminormFamily& family);

/// C B(k+1) u(k+1) = A(k) u(k) + C f(k).
struct DegenerateVbProblem {
  OperatorSequence B;
  /// [A(k)]^{-1} C
  OperatorSequence Ainv_C;
  Matrix C;
  /// Optional single-valued A(k); enables the direct residual.
  std::optional<OperatorSequence> A;
  BiSequence f;
};

struct VbSolution {
  BiSequence v;
  BiSequence u;
  /// Residual of the original equation on u (direct form when A is given, else
  /// u(k) - Ainv_C(k)(B(k+1)u(k+1) - f(k))); inclusion residual of v under "v:" labels in diagnostics.
  SolveReport report;
  bool B_invertible = false;
  /// max kappa(u(k) - B(k)^{-1} v(k)) when every B(k) on the window is invertible.
  std::optional<double> b_inverse_discrepancy;
};

VbSolution solve_degenerate_vb(const DegenerateVbProblem& problem, const SeminormFamily& family, Window window,
                               const SolveOptions& options = {});

/// B(k+1) C u(k+1) = A(k) u(k) + C g(k), with f satisfying B(k+1) C f(k) = C g(k).
struct DegenerateVb1Problem {
  OperatorSequence B;
  /// [A(k)]^{-1} B(k+1) C
  OperatorSequence Ainv_BC;
  Matrix C;
  std::optional<OperatorSequence> A;
  BiSequence g;
  BiSequence f;
};

inline constexpr double kConsistencyTol = 1e-10;

Solution solve_degenerate_vb1(const DegenerateVb1Problem& problem, const SeminormFamily& family, Window window,
                              const SolveOptions& options = {});

}  // namespace apseq
