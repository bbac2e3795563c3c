#include "apseq/first_order_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "apseq/errors.hpp"
#include "apseq/parallel.hpp"

namespace apseq {

double SolveReport::worst_residual() const {
  double worst = 0.0;
  for (const auto& [label, r] : max_residual) worst = std::max(worst, r);
  return worst;
}

double SolveReport::worst_certificate() const {
  double worst = 0.0;
  for (const auto& [label, c] : certificate_sup) worst = std::max(worst, c);
  return worst;
}

namespace {

constexpr long kMatrixCacheEntries = 1L << 24;

// Certificate values memoised on [lo, hi]; only used from the serial phase.
Certificate memoised(const Certificate& cert, long lo, long hi) {
  if (cert.period || hi < lo) return cert;
  auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(hi - lo + 1),
                                                     std::numeric_limits<double>::quiet_NaN());
  Certificate out = cert;
  out.at = [table, lo, hi, at = cert.at](long k) {
    if (k < lo || k > hi) return at(k);
    double& slot = (*table)[static_cast<std::size_t>(k - lo)];
    if (std::isnan(slot)) slot = at(k);
    return slot;
  };
  return out;
}

struct Truncation {
  long V = 0;
  std::map<std::string, std::optional<double>> tails;
};

// Per-label tail targets tol / sup kappa(f).
struct SeriesPlan {
  std::vector<std::string> labels;
  std::map<std::string, double> target;
  long v_max = kDefaultVMax;
};

Truncation choose_truncation(const OperatorSequence& A, const SeriesPlan& plan, long k) {
  Truncation t;
  for (const auto& label : plan.labels) {
    const double target = plan.target.at(label);
    if (std::isinf(target)) {
      t.tails[label] = 0.0;
      continue;
    }
    const RacCertificate rac = rac_certify(A, label, k, plan.v_max, target);
    if (!rac.converged) {
      throw ConvergenceError("certificate sums for seminorm '" + label + "' did not settle below " +
                             format_double(target) + " within " + std::to_string(plan.v_max) + " terms at k=" +
                             std::to_string(k));
    }
    t.V = std::max(t.V, rac.depth());
    t.tails[label] = rac.tail_bound;
  }
  return t;
}

// x(k) = f(k-1) + sum_{v=1}^{V} A(k-1)...A(k-v) f(k-1-v), nested from the far end.
template <class ApplyA, class EvalF>
Vector series_value(long k, long V, const ApplyA& apply_a, const EvalF& eval_f) {
  Vector acc = Vector::Zero(eval_f(k - 1).size());
  for (long v = V; v >= 1; --v) acc = apply_a(k - v, Vector(eval_f(k - 1 - v) + acc));
  return eval_f(k - 1) + acc;
}

}  // namespace

Solution solve_series(const OperatorSequence& A, const BiSequence& f, const SeminormFamily& family, Window window,
                      const SolveOptions& options) {
  window.require_valid("solve_series window");
  if (!(options.tol > 0.0)) throw InputContractError("solve_series: tol must be positive");
  if (options.v_max < 1) throw InputContractError("solve_series: v_max must be >= 1");
  if (A.dim() != f.dim() || A.dim() != family.dim()) {
    throw ShapeError("solve_series: operator, forcing and seminorm family dimensions differ");
  }
  const unsigned threads = options.threads == 0 ? default_threads() : options.threads;

  SolveReport report;
  report.window = window;
  report.probe_window = Window{window.lo - options.v_max - 1, window.hi - 1};

  // Boundedness probe over everything the series can consume.
  const std::vector<Vector> f_values = sample(f, report.probe_window);
  SeriesPlan plan;
  plan.v_max = options.v_max;
  for (const auto& kappa : family) {
    double sup = 0.0;
    for (const auto& y : f_values) {
      const double value = kappa(y);
      if (!std::isfinite(value) || value > kBoundednessLimit) {
        throw BoundednessError("forcing is unbounded on the probe window [" + std::to_string(report.probe_window.lo) +
                               ", " + std::to_string(report.probe_window.hi) + "] for seminorm '" + kappa.label() +
                               "'");
      }
      sup = std::max(sup, value);
    }
    report.f_sup[kappa.label()] = sup;
    plan.labels.push_back(kappa.label());
    plan.target[kappa.label()] = sup > 0.0 ? options.tol / sup : std::numeric_limits<double>::infinity();
    report.certificate_sup[kappa.label()] = A.certificate(kappa.label()).sup_bound;
  }

  // Serial warm-up: certificate memo, truncation depths, operator cache.
  OperatorSequence A_memo = A;
  for (const auto& label : plan.labels) {
    A_memo = A_memo.with_certificate(label, memoised(A.certificate(label), report.probe_window.lo, window.hi - 1));
  }

  const std::size_t n = window.size();
  report.truncation_V.resize(n);
  for (const auto& label : plan.labels) report.tail_bound[label].resize(n);
  long consumed_lo = window.hi;
  for (std::size_t i = 0; i < n; ++i) {
    const long k = window.lo + static_cast<long>(i);
    Truncation t = choose_truncation(A_memo, plan, k);
    report.truncation_V[i] = t.V;
    for (auto& [label, tail] : t.tails) report.tail_bound[label][i] = tail;
    consumed_lo = std::min(consumed_lo, k - std::max(t.V, 1L));
  }

  auto f_at = [&](long k) -> const Vector& {
    return f_values[static_cast<std::size_t>(k - report.probe_window.lo)];
  };

  std::vector<Matrix> a_cache;
  long cache_lo = consumed_lo;
  const long cache_hi = window.hi - 1;
  const auto per = A.period();
  const long d = static_cast<long>(A.dim());
  if (per && *per * d * d <= kMatrixCacheEntries) {
    cache_lo = 0;
    for (long r = 0; r < *per; ++r) a_cache.push_back(A.at(r));
  } else if (!per && (cache_hi - cache_lo + 1) * d * d <= kMatrixCacheEntries) {
    for (long k = cache_lo; k <= cache_hi; ++k) a_cache.push_back(A.at(k));
  }
  auto apply_a = [&](long k, const Vector& y) -> Vector {
    if (a_cache.empty()) return A.apply(k, y);
    if (per) {
      const long r = ((k % *per) + *per) % *per;
      return a_cache[static_cast<std::size_t>(r)] * y;
    }
    return a_cache[static_cast<std::size_t>(k - cache_lo)] * y;
  };

  std::vector<Vector> values(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const long k = window.lo + static_cast<long>(i);
    values[i] = series_value(k, report.truncation_V[i], apply_a, f_at);
  });

  report.uniqueness = uniqueness_certified(A_memo, family) ? "certified" : "not certified";

  // Outside the window the series is evaluated on demand with the same tail targets.
  auto table = std::make_shared<const std::vector<Vector>>(std::move(values));
  const Window w = window;
  BiSequence x = BiSequence::generator(A.dim(), [table, w, A, f, plan](long k) -> Vector {
    if (w.contains(k)) return (*table)[static_cast<std::size_t>(k - w.lo)];
    const Truncation t = choose_truncation(A, plan, k);
    return series_value(
        k, t.V, [&](long j, const Vector& y) { return A.apply(j, y); }, [&](long j) { return f(j); });
  });

  report.max_residual = residual(A, f, x, window, family);
  Solution out{x, std::move(report)};
  attach_analyses(out.report, out.x, family, options);
  return out;
}

std::map<std::string, double> residual(const OperatorSequence& A, const BiSequence& f, const BiSequence& x,
                                       Window window, const SeminormFamily& family) {
  window.require_valid("residual window");
  std::map<std::string, double> out;
  for (const auto& kappa : family) out[kappa.label()] = 0.0;
  Vector next = x(window.lo);
  for (long k = window.lo; k <= window.hi; ++k) {
    const Vector current = next;
    next = x(k + 1);
    const Vector r = next - A.apply(k, current) - f(k);
    for (const auto& kappa : family) out[kappa.label()] = std::max(out[kappa.label()], kappa(r));
  }
  return out;
}

BiSequence forward_oracle(const OperatorSequence& A, const BiSequence& f, long k0, const Vector& x0, Window window) {
  window.require_valid("forward_oracle window");
  if (k0 > window.lo) throw InputContractError("forward_oracle: k0 must not exceed the window start");
  if (x0.size() != A.dim()) throw ShapeError("forward_oracle: initial value has the wrong dimension");
  std::vector<Vector> values;
  values.reserve(static_cast<std::size_t>(window.hi + 1 - k0 + 1));
  values.push_back(x0);
  for (long k = k0; k <= window.hi; ++k) values.push_back(A.apply(k, values.back()) + f(k));
  return BiSequence::table(k0, std::move(values));
}

std::vector<double> homogeneous_decay(const OperatorSequence& A, const std::string& label, long K) {
  if (K < 1) throw InputContractError("homogeneous_decay: K must be >= 1");
  const Certificate& cert = A.certificate(label);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(K));
  double prod = 1.0;
  for (long k = 1; k <= K; ++k) {
    prod *= cert.at(-k);
    out.push_back(prod);
  }
  return out;
}

bool uniqueness_certified(const OperatorSequence& A, const SeminormFamily& family, long K) {
  for (const auto& kappa : family) {
    const Certificate& cert = A.certificate(kappa.label());
    double prod = 1.0;
    bool decayed = false;
    for (long k = 1; k <= K && !decayed; ++k) {
      prod *= cert.at(-k);
      decayed = prod < kUniquenessTol;
    }
    if (!decayed) return false;
  }
  return true;
}

double weighted_growth_check(const BiSequence& x, double alpha, const SeminormFamily& family, Window window) {
  if (!(alpha >= 0.0)) throw InputContractError("weighted_growth_check: alpha must be >= 0");
  window.require_valid("weighted_growth_check window");
  double worst = 0.0;
  for (long k = window.lo; k <= window.hi; ++k) {
    const Vector y = x(k);
    const double weight = std::pow(1.0 + std::abs(static_cast<double>(k)), -alpha);
    for (const auto& kappa : family) worst = std::max(worst, weight * kappa(y));
  }
  return worst;
}

void attach_analyses(SolveReport& report, const BiSequence& x, const SeminormFamily& family,
                     const SolveOptions& options) {
  if (options.periodicity) {
    const long omega = options.periodicity->omega;
    if (omega < 1) throw InputContractError("periodicity check: omega must be positive");
    const Window w = report.window;
    const Window checked{w.lo, std::max(w.lo, w.hi - omega)};
    report.periodicity_defect = omega_c_check(x, omega, options.periodicity->c, family, checked);
  }
  if (options.bohr) {
    const BohrRequest& b = *options.bohr;
    const std::string label = b.seminorm_label.empty() ? family.seminorms().front().label() : b.seminorm_label;
    report.ap_report = bohr_check(x, family.at(label), b.epsilon, b.k_window, b.tau_range, b.L,
                                  options.threads == 0 ? default_threads() : options.threads);
  }
}

}  // namespace apseq
