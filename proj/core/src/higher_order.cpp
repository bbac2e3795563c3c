#include "apseq/higher_order.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "apseq/errors.hpp"

namespace apseq {

namespace {

constexpr long kMaxTabulatedPeriod = 4096;

std::optional<long> joint_period(std::initializer_list<std::optional<long>> periods) {
  long out = 1;
  for (const auto& p : periods) {
    if (!p) return std::nullopt;
    out = std::lcm(out, *p);
  }
  return out;
}

/// Adds exact certificates for any missing label when the sequence is periodic.
OperatorSequence ensure_certified(const OperatorSequence& op, const SeminormFamily& family) {
  bool missing = false;
  for (const auto& kappa : family) missing = missing || !op.has_certificate(kappa.label());
  if (!missing) return op;
  if (op.period() && *op.period() <= kMaxTabulatedPeriod) {
    std::vector<Matrix> ms;
    for (long r = 0; r < *op.period(); ++r) ms.push_back(op.at(r));
    OperatorSequence tab = OperatorSequence::periodic(std::move(ms));
    // keep caller-supplied certificates, fill the rest exactly
    OperatorSequence certified = tab.certified(family);
    for (const auto& label : op.certificate_labels()) certified = certified.with_certificate(label, op.certificate(label));
    return certified;
  }
  for (const auto& kappa : family) {
    if (!op.has_certificate(kappa.label())) {
      throw InputContractError("non-periodic coefficient has no certificate for seminorm '" + kappa.label() + "'");
    }
  }
  return op;
}

OperatorSequence tabulate_if_periodic(const OperatorSequence& op) {
  if (!op.period() || *op.period() > kMaxTabulatedPeriod) return op;
  std::vector<Matrix> ms;
  for (long r = 0; r < *op.period(); ++r) ms.push_back(op.at(r));
  OperatorSequence out = OperatorSequence::periodic(std::move(ms));
  for (const auto& label : op.certificate_labels()) out = out.with_certificate(label, op.certificate(label));
  return out;
}

double block_inf_norm(const Matrix& m) { return m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

Vector CompanionSystem::lift(const Vector& y) const {
  if (y.size() != d) throw ShapeError("companion lift: vector has the wrong dimension");
  Vector out = Vector::Zero(p * d);
  out.head(d) = y;
  return out;
}

BiSequence CompanionSystem::lift(const BiSequence& f) const {
  if (f.dim() != d) throw ShapeError("companion lift: forcing has the wrong dimension");
  const Index dd = d;
  const int pp = p;
  return BiSequence::generator(p * d, [f, dd, pp](long k) -> Vector {
    Vector out = Vector::Zero(pp * dd);
    out.head(dd) = f(k);
    return out;
  });
}

CompanionSystem build_companion(int p, const std::vector<OperatorSequence>& coefficients, const Matrix& C) {
  if (p < 2) throw InputContractError("companion system needs order p >= 2");
  if (coefficients.size() != static_cast<std::size_t>(p) + 1) {
    throw InputContractError("companion system of order " + std::to_string(p) + " needs " + std::to_string(p + 1) +
                             " coefficient sequences");
  }
  const Index d = coefficients.front().dim();
  for (const auto& a : coefficients) {
    if (a.dim() != d) throw ShapeError("companion coefficients must share one dimension");
  }
  if (C.rows() != d || C.cols() != d) throw ShapeError("companion regularizer has the wrong shape");

  const Index n = p * d;
  Matrix bold_C = Matrix::Zero(n, n);
  for (int i = 0; i < p; ++i) bold_C.block(i * d, i * d, d, d) = C;

  const OperatorSequence a0 = coefficients[0];
  OperatorSequence bold_A = OperatorSequence::generator(
      n,
      [a0, C, p, d](long k) -> Matrix {
        Matrix m = Matrix::Zero(p * d, p * d);
        m.topLeftCorner(d, d) = -a0.at(k);
        for (int i = 1; i < p; ++i) m.block(i * d, i * d, d, d) = C;
        return m;
      },
      a0.period());

  std::optional<long> b_period = 1;
  for (int j = 1; j <= p; ++j) b_period = joint_period({b_period, coefficients[static_cast<std::size_t>(j)].period()});
  OperatorSequence bold_B = OperatorSequence::generator(
      n,
      [coefficients, p, d](long k) -> Matrix {
        Matrix m = Matrix::Zero(p * d, p * d);
        for (int j = 1; j <= p; ++j) m.block(0, (j - 1) * d, d, d) = coefficients[static_cast<std::size_t>(j)].at(k + j - 1);
        for (int i = 1; i < p; ++i) m.block(i * d, (i - 1) * d, d, d).setIdentity();
        return m;
      },
      b_period);
  return CompanionSystem{p, d, bold_A, bold_B, bold_C, coefficients, C};
}

Matrix companion_D_block(const CompanionSystem& sys, const OperatorSequence& A0inv_C, long k) {
  const Index d = sys.d;
  const int p = sys.p;
  if (A0inv_C.dim() != d) throw ShapeError("companion_D_block: resolvent has the wrong dimension");
  const Matrix r = A0inv_C.at(k);
  Matrix m = Matrix::Zero(p * d, p * d);
  m.topLeftCorner(d, d) = -sys.coefficients[1].at(k) * r;
  for (int j = 2; j <= p; ++j) m.block(0, (j - 1) * d, d, d) = sys.coefficients[static_cast<std::size_t>(j)].at(k + j - 1);
  m.block(d, 0, d, d) = -r;
  for (int i = 2; i < p; ++i) m.block(i * d, (i - 1) * d, d, d).setIdentity();
  return m;
}

SecondOrderSolution solve_second_order(const SecondOrderProblem& problem, const SeminormFamily& family,
                                       Window window, const SolveOptions& options) {
  window.require_valid("solve_second_order window");
  const Index d = problem.A0.dim();
  if (problem.A1.dim() != d || problem.A2.dim() != d || problem.f.dim() != d || family.dim() != d) {
    throw ShapeError("solve_second_order: coefficient, forcing and family dimensions differ");
  }

  OperatorSequence r = problem.A0inv_C ? ensure_certified(*problem.A0inv_C, family)
                                       : selection_from_operator(problem.A0, problem.C, family).D;
  r = tabulate_if_periodic(r);
  const OperatorSequence a1 = ensure_certified(problem.A1, family);
  const OperatorSequence a2 = ensure_certified(problem.A2, family);
  const OperatorSequence a1r = ensure_certified(tabulate_if_periodic(compose(a1, r)), family);

  const CompanionSystem sys = build_companion(2, {problem.A0, a1, a2}, problem.C);
  const auto period = joint_period({r.period(), a1.period(), a2.period()});
  OperatorSequence D = tabulate_if_periodic(
      OperatorSequence::generator(2 * d, [sys, r](long k) { return companion_D_block(sys, r, k); }, period));

  const SeminormFamily lifted = family.lifted(2);
  for (const auto& kappa : family) {
    const Certificate c1 = r.certificate(kappa.label());
    const Certificate c2 = a1r.certificate(kappa.label());
    const Certificate c3 = a2.certificate(kappa.label());
    Certificate c;
    c.at = [f1 = c1.at, f2 = c2.at, f3 = c3.at](long k) { return f1(k) + f2(k) + f3(k + 1); };
    c.sup_bound = c1.sup_bound + c2.sup_bound + c3.sup_bound;
    c.period = joint_period({c1.period, c2.period, c3.period});
    D = D.with_certificate(kappa.label(), std::move(c));
  }

  const BiSequence f_bar = sys.lift(problem.f);
  const ResolventSelection sel{D, sys.bold_C, "companion B(k) [A(k)]^{-1} C"};
  SolveOptions inner_options = options;
  inner_options.periodicity.reset();
  inner_options.bohr.reset();
  Solution inner = solve_inclusion(sel, f_bar, lifted, window, inner_options);

  const BiSequence v_bar = inner.x;
  auto state_rule = [v_bar, f_bar, r, d](long k) -> Vector {
    const Vector w = v_bar(k + 1) - f_bar(k);
    Vector out(2 * d);
    out.head(d) = -r.apply(k, Vector(w.head(d)));
    out.tail(d) = w.tail(d);
    return out;
  };
  const Window state_window{window.lo, window.hi + 2};
  auto table = std::make_shared<std::vector<Vector>>();
  for (long k = state_window.lo; k <= state_window.hi; ++k) table->push_back(state_rule(k));
  const BiSequence state = BiSequence::generator(2 * d, [table, state_window, state_rule](long k) -> Vector {
    if (state_window.contains(k)) return (*table)[static_cast<std::size_t>(k - state_window.lo)];
    return state_rule(k);
  });
  const BiSequence u = BiSequence::generator(d, [state, d](long k) -> Vector { return state(k).head(d); });

  SecondOrderSolution out{u, state, std::move(inner.report)};
  SolveReport& report = out.report;
  for (const auto& [label, res] : report.max_residual) report.diagnostics["v_residual:" + label] = res;

  std::map<std::string, double> scalar_res;
  std::map<std::string, double> block_res;
  double shift = 0.0;
  for (const auto& kappa : family) {
    scalar_res[kappa.label()] = 0.0;
    block_res[kappa.label()] = 0.0;
  }
  const Matrix& C = problem.C;
  for (long k = window.lo; k <= window.hi; ++k) {
    const Vector uk = u(k);
    const Vector uk1 = u(k + 1);
    const Vector uk2 = u(k + 2);
    const Vector rs = C * problem.A2.apply(k + 2, uk2) + C * problem.A1.apply(k + 1, uk1) + problem.A0.apply(k, uk) -
                      C * problem.f(k);
    const Vector sk = state(k);
    const Vector sk1 = state(k + 1);
    const Vector rb = sys.bold_C * sys.bold_B.apply(k + 1, sk1) - sys.bold_A.apply(k, sk) - sys.bold_C * f_bar(k);
    for (const auto& kappa : family) {
      scalar_res[kappa.label()] = std::max(scalar_res[kappa.label()], kappa(rs));
      shift = std::max(shift, kappa(Vector(sk.tail(d) - sk1.head(d))));
    }
    for (const auto& kappa : lifted) block_res[kappa.label()] = std::max(block_res[kappa.label()], kappa(rb));
  }
  report.max_residual = scalar_res;
  for (const auto& [label, res] : block_res) report.diagnostics["block_residual:" + label] = res;
  report.diagnostics["shift_consistency"] = shift;
  report.notes.push_back("residual: C A2(k+2) u(k+2) + C A1(k+1) u(k+1) + A0(k) u(k) - C f(k)");

  attach_analyses(report, u, family, options);
  return out;
}

SecondOrderSolution solve_higher_order(int p, const SecondOrderProblem& problem, const SeminormFamily& family,
                                       Window window, const SolveOptions& options) {
  if (p < 2) throw InputContractError("higher-order solve needs p >= 2");
  if (p >= 3) {
    throw InputContractError(
        "the companion reduction cannot be applied if p >= 3: its identity blocks violate the summability "
        "condition on the bound certificates");
  }
  return solve_second_order(problem, family, window, options);
}

BmReduction build_B_from_D(const OperatorSequence& A_mat, const OperatorSequence& D_mat, int p, Window window) {
  if (p < 1) throw InputContractError("build_B_from_D: p must be >= 1");
  if (A_mat.dim() != D_mat.dim()) throw ShapeError("build_B_from_D: A and D dimensions differ");
  if (A_mat.dim() % p != 0) throw ShapeError("build_B_from_D: dimension is not a multiple of p");
  window.require_valid("build_B_from_D window");

  const auto period = joint_period({A_mat.period(), D_mat.period()});
  BmReduction out{OperatorSequence::generator(
      A_mat.dim(), [A_mat, D_mat](long k) -> Matrix { return A_mat.at(k - 1) * D_mat.at(k - 1); }, period)};

  const Index d = A_mat.dim() / p;
  for (long k = window.lo; k <= window.hi; ++k) {
    const Matrix m = D_mat.at(k);
    double total = 0.0;
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) total += block_inf_norm(m.block(i * d, j * d, d, d));
    }
    out.budget = std::max(out.budget, total);
  }
  out.budget_limit = 1.0 / (2.0 * p * p);
  out.budget_ok = out.budget <= out.budget_limit;
  return out;
}

Solution solve_system_bm(const OperatorSequence& A_mat, const OperatorSequence& D_mat, int p, const BiSequence& f,
                         const SeminormFamily& family, Window window, const SolveOptions& options) {
  const BmReduction bm = build_B_from_D(A_mat, D_mat, p, window);
  const OperatorSequence D = ensure_certified(D_mat, family);
  const OperatorSequence B = bm.B;
  const BiSequence g = BiSequence::generator(f.dim(), [B, f](long k) -> Vector { return B.apply(k + 1, f(k)); });

  DegenerateVb1Problem problem{B, D, Matrix::Identity(A_mat.dim(), A_mat.dim()), A_mat, g, f};
  Solution out = solve_degenerate_vb1(problem, family, window, options);
  out.report.diagnostics["bm_budget"] = bm.budget;
  out.report.diagnostics["bm_budget_limit"] = bm.budget_limit;
  if (!bm.budget_ok) {
    out.report.notes.push_back("warning: sum of block norms of D exceeds 1/(2p^2); convergence rests on the certificate");
  }
  return out;
}

}  // namespace apseq
