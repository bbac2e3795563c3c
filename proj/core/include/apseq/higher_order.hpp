#pragma once

#include <optional>
#include <vector>

#include "apseq/resolvent_solvers.hpp"

namespace apseq {

/// Block first-order form of
///   C A_p(k+p) u(k+p) + ... + C A_1(k+1) u(k+1) + A_0(k) u(k) = C f(k)
/// in the state vec_u(k) = [u(k), ..., u(k+p-1)]:  C B(k+1) vec_u(k+1) = A(k) vec_u(k) + C vec_f(k).
struct CompanionSystem {
  int p = 2;
  Index d = 0;
  /// diag(-A_0(k), C, ..., C)
  OperatorSequence bold_A;
  /// First row [A_1(k), A_2(k+1), ..., A_p(k+p-1)], identities on the subdiagonal.
  OperatorSequence bold_B;
  /// C on every diagonal block.
  Matrix bold_C;
  std::vector<OperatorSequence> coefficients;
  Matrix C;

  /// [y, 0, ..., 0]
  [[nodiscard]] Vector lift(const Vector& y) const;
  [[nodiscard]] BiSequence lift(const BiSequence& f) const;
};

/// coefficients = {A_0, ..., A_p}.
CompanionSystem build_companion(int p, const std::vector<OperatorSequence>& coefficients, const Matrix& C);

/// B(k) [A(k)]^{-1} C assembled blockwise from A0inv_C(k) = [A_0(k)]^{-1} C:
///   row 1: [-A_1(k) A0inv_C(k), A_2(k+1), ..., A_p(k+p-1)]
///   row 2: [-A0inv_C(k), 0, ..., 0]
///   row i >= 3: identity in column i-1.
/// This is the selection the degenerate (B(k) v(k) = w) reduction consumes.
Matrix companion_D_block(const CompanionSystem& sys, const OperatorSequence& A0inv_C, long k);

struct SecondOrderProblem {
  OperatorSequence A0;
  OperatorSequence A1;
  OperatorSequence A2;
  Matrix C;
  /// [A_0(k)]^{-1} C with certificates; computed by LU from A0 when absent.
  std::optional<OperatorSequence> A0inv_C;
  BiSequence f;
};

struct SecondOrderSolution {
  BiSequence u;
  /// [u(k), u(k+1)] as recovered from the companion solve.
  BiSequence state;
  /// max_residual holds the scalar-level residual
  ///   C A_2(k+2) u(k+2) + C A_1(k+1) u(k+1) + A_0(k) u(k) - C f(k);
  /// diagnostics carry "shift_consistency" and the block residuals.
  SolveReport report;
};

/// p = 2 solve through the companion system with certificate
///   c(k) = c(A0inv_C, k) + c(A_1 A0inv_C, k) + c(A_2, k+1).
SecondOrderSolution solve_second_order(const SecondOrderProblem& problem, const SeminormFamily& family,
                                       Window window, const SolveOptions& options = {});

/// Entry point for general p; rejects p >= 3 (the summability condition cannot hold for
/// the companion system there because of the identity blocks).
SecondOrderSolution solve_higher_order(int p, const SecondOrderProblem& problem, const SeminormFamily& family,
                                       Window window, const SolveOptions& options = {});

struct BmReduction {
  /// B(k) = A(k-1) D(k-1), so B(k+1) = A(k) D(k).
  OperatorSequence B;
  /// max over the checked window of sum_{i,j} ||D_ij(k)||_inf.
  double budget = 0.0;
  /// 1 / (2 p^2)
  double budget_limit = 0.0;
  bool budget_ok = false;
};

BmReduction build_B_from_D(const OperatorSequence& A_mat, const OperatorSequence& D_mat, int p, Window window);

/// B(k+1) u(k+1) = A(k) u(k) + g(k) with g(k) = B(k+1) f(k), solved through the degenerate
/// route with selection D(k). D_mat must carry certificates for the family.
Solution solve_system_bm(const OperatorSequence& A_mat, const OperatorSequence& D_mat, int p, const BiSequence& f,
                         const SeminormFamily& family, Window window, const SolveOptions& options = {});

}  // namespace apseq
