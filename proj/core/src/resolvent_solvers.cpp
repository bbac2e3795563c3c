#include "apseq/resolvent_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "apseq/errors.hpp"

namespace apseq {

namespace {

constexpr long kMaxTabulatedPeriod = 4096;

double inf_norm(const Vector& y) { return y.size() == 0 ? 0.0 : y.cwiseAbs().maxCoeff(); }
double inf_norm(const Matrix& m) { return m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff(); }

Matrix solve_checked(const Matrix& a, const Matrix& rhs, const char* what, long k) {
  Eigen::PartialPivLU<Matrix> lu(a);
  if (!(reciprocal_condition(lu) >= 1e-12)) {
    throw NumericError(std::string(what) + " is singular or ill-conditioned at k=" + std::to_string(k) +
                       " (rcond " + format_double(reciprocal_condition(lu)) + ")");
  }
  return lu.solve(rhs);
}

BiSequence tabulate_with_fallback(Index dim, Window w, std::vector<Vector> values,
                                  std::function<Vector(long)> fallback) {
  auto table = std::make_shared<const std::vector<Vector>>(std::move(values));
  return BiSequence::generator(dim, [table, w, fallback = std::move(fallback)](long k) -> Vector {
    if (w.contains(k)) return (*table)[static_cast<std::size_t>(k - w.lo)];
    return fallback(k);
  });
}

SolveOptions without_analyses(SolveOptions o) {
  o.periodicity.reset();
  o.bohr.reset();
  return o;
}

}  // namespace

ResolventSelection selection_from_operator(const OperatorSequence& A_mat, const Matrix& C,
                                           const SeminormFamily& family,
                                           const std::map<std::string, double>& sup_bounds) {
  if (C.rows() != A_mat.dim() || C.cols() != A_mat.dim()) throw ShapeError("selection: C has the wrong shape");
  OperatorSequence D = OperatorSequence::constant(Matrix::Zero(A_mat.dim(), A_mat.dim()));
  const auto per = A_mat.period();
  if (per && *per <= kMaxTabulatedPeriod) {
    std::vector<Matrix> ms;
    for (long r = 0; r < *per; ++r) ms.push_back(solve_checked(A_mat.at(r), C, "A(k)", r));
    D = OperatorSequence::periodic(std::move(ms));
  } else {
    D = OperatorSequence::generator(
        A_mat.dim(), [A_mat, C](long k) { return solve_checked(A_mat.at(k), C, "A(k)", k); }, per);
  }
  return {D.certified(family, sup_bounds), C, "numeric linear solve A(k)^{-1} C (partial pivoting)"};
}

double selection_consistency(const OperatorSequence& A_mat, const ResolventSelection& sel, Window window) {
  window.require_valid("selection_consistency window");
  const double scale = std::max(1.0, inf_norm(sel.C));
  double worst = 0.0;
  for (long k = window.lo; k <= window.hi; ++k) {
    worst = std::max(worst, inf_norm(Matrix(A_mat.at(k) * sel.D.at(k) - sel.C)) / scale);
  }
  return worst;
}

OperatorSequence reflect(const OperatorSequence& s) {
  const auto per = s.period();
  OperatorSequence out = OperatorSequence::constant(Matrix::Zero(s.dim(), s.dim()));
  if (per && *per <= kMaxTabulatedPeriod) {
    std::vector<Matrix> ms;
    ms.reserve(static_cast<std::size_t>(*per));
    for (long r = 0; r < *per; ++r) ms.push_back(s.at(-r - 1));
    out = OperatorSequence::periodic(std::move(ms));
  } else {
    out = OperatorSequence::generator(s.dim(), [s](long k) { return s.at(-k - 1); }, per);
  }
  for (const auto& label : s.certificate_labels()) {
    const Certificate& c = s.certificate(label);
    out = out.with_certificate(label, Certificate{[at = c.at](long k) { return at(-k - 1); }, c.sup_bound, c.period});
  }
  return out;
}

Solution solve_inclusion(const ResolventSelection& sel, const BiSequence& f, const SeminormFamily& family,
                         Window window, const SolveOptions& options) {
  window.require_valid("solve_inclusion window");
  if (sel.D.dim() != f.dim()) throw ShapeError("solve_inclusion: selection and forcing dimensions differ");

  const OperatorSequence D = sel.D;
  const OperatorSequence D_tilde = reflect(D);
  const BiSequence f_tilde = BiSequence::generator(f.dim(), [D, f](long k) -> Vector {
    return -D.apply(-k - 1, f(-k - 1));
  });

  const Window inner_window{-window.hi, -window.lo};
  Solution inner = solve_series(D_tilde, f_tilde, family, inner_window, without_analyses(options));

  const BiSequence v = inner.x;
  const BiSequence x = BiSequence::generator(f.dim(), [v](long k) { return v(-k); });

  SolveReport report = std::move(inner.report);
  report.window = window;
  std::reverse(report.truncation_V.begin(), report.truncation_V.end());
  for (auto& [label, tails] : report.tail_bound) std::reverse(tails.begin(), tails.end());
  // Forcing indices consumed by the transformed problem.
  report.probe_window = Window{-report.probe_window.hi - 1, -report.probe_window.lo - 1};
  report.max_residual = inclusion_residual(sel, f, x, window, family);
  report.notes.push_back("selection: " + sel.description);

  Solution out{x, std::move(report)};
  attach_analyses(out.report, out.x, family, options);
  return out;
}

std::map<std::string, double> inclusion_residual(const ResolventSelection& sel, const BiSequence& f,
                                                 const BiSequence& x, Window window, const SeminormFamily& family) {
  window.require_valid("inclusion_residual window");
  std::map<std::string, double> out;
  for (const auto& kappa : family) out[kappa.label()] = 0.0;
  Vector next = x(window.lo);
  for (long k = window.lo; k <= window.hi; ++k) {
    const Vector current = next;
    next = x(k + 1);
    const Vector r = current - sel.D.apply(k, Vector(next - f(k)));
    for (const auto& kappa : family) out[kappa.label()] = std::max(out[kappa.label()], kappa(r));
  }
  return out;
}

VbSolution solve_degenerate_vb(const DegenerateVbProblem& problem, const SeminormFamily& family, Window window,
                               const SolveOptions& options) {
  window.require_valid("solve_degenerate_vb window");
  const Index d = problem.B.dim();
  if (problem.Ainv_C.dim() != d || problem.f.dim() != d || problem.C.rows() != d || problem.C.cols() != d) {
    throw ShapeError("solve_degenerate_vb: operator and forcing dimensions differ");
  }

  OperatorSequence D = compose(problem.B, problem.Ainv_C);
  if (D.period() && *D.period() <= kMaxTabulatedPeriod) {
    // Periodic composite: tabulate and certify the product itself (never looser than the
    // product of the factor certificates).
    std::vector<Matrix> ms;
    for (long r = 0; r < *D.period(); ++r) ms.push_back(D.at(r));
    D = OperatorSequence::periodic(std::move(ms)).certified(family);
  }
  const ResolventSelection sel{D, problem.C, "B(k) [A(k)]^{-1} C"};
  Solution inner = solve_inclusion(sel, problem.f, family, window, without_analyses(options));

  const BiSequence v = inner.x;
  const OperatorSequence Ainv_C = problem.Ainv_C;
  const BiSequence f = problem.f;
  auto u_rule = [v, Ainv_C, f](long k) -> Vector { return Ainv_C.apply(k, Vector(v(k + 1) - f(k))); };
  std::vector<Vector> u_values;
  u_values.reserve(window.size());
  for (long k = window.lo; k <= window.hi; ++k) u_values.push_back(u_rule(k));
  const BiSequence u = tabulate_with_fallback(d, window, std::move(u_values), u_rule);

  VbSolution out{v, u, std::move(inner.report), false, std::nullopt};
  for (const auto& [label, r] : out.report.max_residual) out.report.diagnostics["v_residual:" + label] = r;

  // Residual of the original equation on u.
  std::map<std::string, double> res;
  for (const auto& kappa : family) res[kappa.label()] = 0.0;
  for (long k = window.lo; k <= window.hi; ++k) {
    const Vector uk = u(k);
    const Vector uk1 = u(k + 1);
    Vector r;
    if (problem.A) {
      r = problem.C * problem.B.apply(k + 1, uk1) - problem.A->apply(k, uk) - problem.C * f(k);
    } else {
      r = uk - Ainv_C.apply(k, Vector(problem.B.apply(k + 1, uk1) - f(k)));
    }
    for (const auto& kappa : family) res[kappa.label()] = std::max(res[kappa.label()], kappa(r));
  }
  out.report.max_residual = res;
  out.report.notes.push_back(problem.A ? "residual: C B(k+1) u(k+1) - A(k) u(k) - C f(k)"
                                       : "residual: u(k) - [A(k)]^{-1} C (B(k+1) u(k+1) - f(k))");

  // Cross-check u against B^{-1} v where B is invertible.
  bool invertible = true;
  double discrepancy = 0.0;
  for (long k = window.lo; k <= window.hi && invertible; ++k) {
    Eigen::PartialPivLU<Matrix> lu(problem.B.at(k));
    if (!(reciprocal_condition(lu) >= 1e-12)) {
      invertible = false;
      break;
    }
    const Vector diff = u(k) - lu.solve(v(k));
    for (const auto& kappa : family) discrepancy = std::max(discrepancy, kappa(diff));
  }
  out.B_invertible = invertible;
  if (invertible) {
    out.b_inverse_discrepancy = discrepancy;
    out.report.diagnostics["b_inverse_discrepancy"] = discrepancy;
  } else {
    out.report.notes.push_back("B(k) not invertible on the window; u recovered from the resolvent form only");
  }

  attach_analyses(out.report, out.u, family, options);
  return out;
}

Solution solve_degenerate_vb1(const DegenerateVb1Problem& problem, const SeminormFamily& family, Window window,
                              const SolveOptions& options) {
  window.require_valid("solve_degenerate_vb1 window");
  const Index d = problem.B.dim();
  if (problem.Ainv_BC.dim() != d || problem.f.dim() != d || problem.g.dim() != d || problem.C.rows() != d ||
      problem.C.cols() != d) {
    throw ShapeError("solve_degenerate_vb1: operator and forcing dimensions differ");
  }

  for (long k = window.lo; k <= window.hi; ++k) {
    const Vector cg = problem.C * problem.g(k);
    const Vector lhs = problem.B.apply(k + 1, Vector(problem.C * problem.f(k)));
    const double gap = inf_norm(Vector(lhs - cg));
    if (gap > kConsistencyTol * std::max(1.0, inf_norm(cg))) {
      throw InputContractError("forcing consistency B(k+1) C f(k) = C g(k) fails at k=" + std::to_string(k) +
                               " (gap " + format_double(gap) + ")");
    }
  }

  const ResolventSelection sel{problem.Ainv_BC, problem.C, "[A(k)]^{-1} B(k+1) C"};
  Solution out = solve_inclusion(sel, problem.f, family, window, without_analyses(options));

  if (problem.A) {
    for (const auto& [label, r] : out.report.max_residual) out.report.diagnostics["inclusion_residual:" + label] = r;
    std::map<std::string, double> res;
    for (const auto& kappa : family) res[kappa.label()] = 0.0;
    for (long k = window.lo; k <= window.hi; ++k) {
      const Vector r = problem.B.apply(k + 1, Vector(problem.C * out.x(k + 1))) - problem.A->apply(k, out.x(k)) -
                       problem.C * problem.g(k);
      for (const auto& kappa : family) res[kappa.label()] = std::max(res[kappa.label()], kappa(r));
    }
    out.report.max_residual = res;
    out.report.notes.push_back("residual: B(k+1) C u(k+1) - A(k) u(k) - C g(k)");
  } else {
    out.report.notes.push_back("residual: u(k) - [A(k)]^{-1} B(k+1) C (u(k+1) - f(k))");
  }

  attach_analyses(out.report, out.x, family, options);
  return out;
}

}  // namespace apseq
