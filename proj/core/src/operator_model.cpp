#include "apseq/operator_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>

#include "apseq/errors.hpp"

namespace apseq {

namespace {

double max_row_sum(const Matrix& m) { return m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff(); }
double max_col_sum(const Matrix& m) { return m.cols() == 0 ? 0.0 : m.cwiseAbs().colwise().sum().maxCoeff(); }

long positive_mod(long k, long n) {
  const long r = k % n;
  return r < 0 ? r + n : r;
}

}  // namespace

double induced_bound(const Matrix& m, const Seminorm& kappa) {
  if (m.rows() != m.cols()) throw ShapeError("induced_bound: operator must be square");
  switch (kappa.kind()) {
    case SeminormKind::sup:
      return max_row_sum(m);
    case SeminormKind::p_norm: {
      if (kappa.p() == 1.0) return max_col_sum(m);
      if (kappa.p() == 2.0) {
        if (m.size() == 0) return 0.0;
        Eigen::JacobiSVD<Matrix> svd(m);
        return svd.singularValues()(0);
      }
      // Riesz-Thorin interpolation between the 1- and inf-norms.
      const double inv_p = 1.0 / kappa.p();
      return std::pow(max_col_sum(m), inv_p) * std::pow(max_row_sum(m), 1.0 - inv_p);
    }
    case SeminormKind::stencil: {
      const Matrix s = kappa.stencil_matrix(m.rows());
      Eigen::PartialPivLU<Matrix> lu(s);
      if (!(reciprocal_condition(lu) >= 1e-12)) {
        throw InputContractError("stencil seminorm '" + kappa.label() +
                                 "' is degenerate on this space; no operator bound can be certified");
      }
      return max_row_sum(s * m * lu.inverse());
    }
    case SeminormKind::product: {
      const Index p = kappa.blocks();
      if (m.rows() % p != 0) throw ShapeError("induced_bound: operator size not divisible by block count");
      const Index d = m.rows() / p;
      double worst = 0.0;
      for (Index j = 0; j < p; ++j) {
        double column = 0.0;
        for (Index i = 0; i < p; ++i) column += induced_bound(m.block(i * d, j * d, d, d), kappa.base());
        worst = std::max(worst, column);
      }
      return worst;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

namespace {

struct ConstantBackend {
  Matrix m;
};
struct PeriodicBackend {
  std::vector<Matrix> ms;
};
struct GeneratorBackend {
  std::function<Matrix(long)> rule;
  std::optional<long> period;
  std::vector<std::pair<double, Matrix>> trig_terms;  // nonempty for trig sequences
};

}  // namespace

struct OperatorSequence::Backend {
  Index dim;
  std::variant<ConstantBackend, PeriodicBackend, GeneratorBackend> kind;
};

OperatorSequence::OperatorSequence(std::shared_ptr<const Backend> backend, std::map<std::string, Certificate> certs)
    : backend_(std::move(backend)), certs_(std::move(certs)) {}

OperatorSequence OperatorSequence::constant(Matrix m) {
  if (m.rows() != m.cols() || m.rows() < 1) throw ShapeError("operator must be a nonempty square matrix");
  const Index d = m.rows();
  return {std::make_shared<const Backend>(Backend{d, ConstantBackend{std::move(m)}}), {}};
}

OperatorSequence OperatorSequence::periodic(std::vector<Matrix> ms) {
  if (ms.empty()) throw InputContractError("periodic operator sequence needs at least one matrix");
  const Index d = ms.front().rows();
  for (const auto& m : ms) {
    if (m.rows() != d || m.cols() != d) throw ShapeError("periodic operator matrices must share a square shape");
  }
  return {std::make_shared<const Backend>(Backend{d, PeriodicBackend{std::move(ms)}}), {}};
}

OperatorSequence OperatorSequence::generator(Index dim, std::function<Matrix(long)> rule,
                                             std::optional<long> period) {
  if (period && *period < 1) throw InputContractError("declared period must be positive");
  return {std::make_shared<const Backend>(Backend{dim, GeneratorBackend{std::move(rule), period, {}}}), {}};
}

OperatorSequence OperatorSequence::trig(std::vector<std::pair<double, Matrix>> terms) {
  if (terms.empty()) throw InputContractError("trig operator sequence needs at least one term");
  const Index d = terms.front().second.rows();
  for (const auto& [lambda, m] : terms) {
    if (m.rows() != d || m.cols() != d) throw ShapeError("trig operator coefficients must share a square shape");
  }
  auto rule = [terms](long k) {
    Matrix out = Matrix::Zero(terms.front().second.rows(), terms.front().second.cols());
    for (const auto& [lambda, m] : terms) out += m * std::polar(1.0, lambda * static_cast<double>(k));
    return out;
  };
  std::optional<long> period;
  if (std::all_of(terms.begin(), terms.end(), [](const auto& t) { return t.first == 0.0; })) period = 1;
  return {std::make_shared<const Backend>(Backend{d, GeneratorBackend{rule, period, std::move(terms)}}), {}};
}

Matrix OperatorSequence::at(long k) const {
  return std::visit(
      [&](const auto& b) -> Matrix {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, ConstantBackend>) {
          return b.m;
        } else if constexpr (std::is_same_v<B, PeriodicBackend>) {
          return b.ms[static_cast<std::size_t>(positive_mod(k, static_cast<long>(b.ms.size())))];
        } else {
          Matrix m = b.rule(k);
          if (m.rows() != backend_->dim || m.cols() != backend_->dim) {
            throw ShapeError("operator generator returned a matrix of the wrong shape");
          }
          return m;
        }
      },
      backend_->kind);
}

Vector OperatorSequence::apply(long k, const Vector& x) const {
  if (x.size() != backend_->dim) {
    throw ShapeError("operator of dimension " + std::to_string(backend_->dim) + " applied to vector of length " +
                     std::to_string(x.size()));
  }
  if (const auto* c = std::get_if<ConstantBackend>(&backend_->kind)) return c->m * x;
  if (const auto* p = std::get_if<PeriodicBackend>(&backend_->kind)) {
    return p->ms[static_cast<std::size_t>(positive_mod(k, static_cast<long>(p->ms.size())))] * x;
  }
  return at(k) * x;
}

Index OperatorSequence::dim() const { return backend_->dim; }

std::optional<long> OperatorSequence::period() const {
  if (std::holds_alternative<ConstantBackend>(backend_->kind)) return 1;
  if (const auto* p = std::get_if<PeriodicBackend>(&backend_->kind)) return static_cast<long>(p->ms.size());
  return std::get<GeneratorBackend>(backend_->kind).period;
}

OperatorSequence OperatorSequence::with_certificate(const std::string& label, Certificate cert) const {
  if (!cert.at) throw InputContractError("certificate for '" + label + "' has no rule");
  auto certs = certs_;
  certs[label] = std::move(cert);
  return {backend_, std::move(certs)};
}

OperatorSequence OperatorSequence::certified(const SeminormFamily& family,
                                             const std::map<std::string, double>& sup_bounds) const {
  if (family.dim() != dim()) throw ShapeError("certified: family dimension does not match the operator");
  auto certs = certs_;
  const auto per = period();
  for (const auto& kappa : family) {
    Certificate cert;
    if (per) {
      std::vector<double> table;
      table.reserve(static_cast<std::size_t>(*per));
      for (long r = 0; r < *per; ++r) table.push_back(induced_bound(at(r), kappa));
      cert.sup_bound = *std::max_element(table.begin(), table.end());
      const long n = *per;
      cert.at = [table = std::move(table), n](long k) { return table[static_cast<std::size_t>(positive_mod(k, n))]; };
      cert.period = n;
    } else {
      const auto& gen = std::get<GeneratorBackend>(backend_->kind);
      if (auto it = sup_bounds.find(kappa.label()); it != sup_bounds.end()) {
        cert.sup_bound = it->second;
      } else if (!gen.trig_terms.empty()) {
        double total = 0.0;
        for (const auto& [lambda, m] : gen.trig_terms) total += induced_bound(m, kappa);
        cert.sup_bound = total;
      } else {
        throw InputContractError("generator operator needs an explicit sup bound for seminorm '" + kappa.label() +
                                 "'");
      }
      OperatorSequence self = *this;
      cert.at = [self, kappa](long k) { return induced_bound(self.at(k), kappa); };
    }
    certs[kappa.label()] = std::move(cert);
  }
  return {backend_, std::move(certs)};
}

bool OperatorSequence::has_certificate(const std::string& label) const { return certs_.contains(label); }

const Certificate& OperatorSequence::certificate(const std::string& label) const {
  auto it = certs_.find(label);
  if (it == certs_.end()) throw InputContractError("operator has no bound certificate for seminorm '" + label + "'");
  return it->second;
}

std::vector<std::string> OperatorSequence::certificate_labels() const {
  std::vector<std::string> out;
  for (const auto& [label, cert] : certs_) out.push_back(label);
  return out;
}

OperatorSequence compose(const OperatorSequence& a, const OperatorSequence& b) {
  if (a.dim() != b.dim()) throw ShapeError("compose: operator dimensions differ");
  std::optional<long> period;
  if (a.period() && b.period()) period = std::lcm(*a.period(), *b.period());
  auto out = OperatorSequence::generator(a.dim(), [a, b](long k) -> Matrix { return a.at(k) * b.at(k); }, period);
  for (const auto& label : a.certificate_labels()) {
    if (!b.has_certificate(label)) continue;
    const Certificate ca = a.certificate(label);
    const Certificate cb = b.certificate(label);
    Certificate c;
    c.at = [fa = ca.at, fb = cb.at](long k) { return fa(k) * fb(k); };
    c.sup_bound = ca.sup_bound * cb.sup_bound;
    if (ca.period && cb.period) c.period = std::lcm(*ca.period, *cb.period);
    out = out.with_certificate(label, std::move(c));
  }
  return out;
}

Vector op_apply(const OperatorSequence& a, long k, const Vector& x) { return a.apply(k, x); }

Vector op_product_apply(const OperatorSequence& a, long k, long v, const Vector& x) {
  if (v < 1) throw InputContractError("op_product_apply: v must be >= 1");
  Vector y = x;
  for (long i = v; i >= 1; --i) y = a.apply(k - i, y);
  return y;
}

RacCertificate rac_certify(const OperatorSequence& a, const std::string& label, long k, long v_max, double tol) {
  if (v_max < 1) throw InputContractError("rac_certify: V_max must be >= 1");
  const Certificate& cert = a.certificate(label);
  const double sup = cert.sup_bound;

  RacCertificate out;
  out.seminorm_label = label;
  out.k = k;

  // Full-period product for the periodic tail; constant over V.
  std::optional<double> period_product;
  if (cert.period && sup >= 1.0) {
    double prod = 1.0;
    for (long i = 1; i <= *cert.period; ++i) prod *= cert.at(k - i);
    period_product = prod;
  }

  double prod = 1.0;
  double sum = 0.0;
  int small_run = 0;
  for (long v = 1; v <= v_max; ++v) {
    prod *= cert.at(k - v);
    sum += prod;
    out.partial_sums.emplace_back(v, sum);

    std::optional<double> tail;
    if (sup < 1.0) {
      tail = prod * sup / (1.0 - sup);
    } else if (period_product && *period_product < 1.0) {
      double run = prod;
      double s = 0.0;
      for (long r = 1; r <= *cert.period; ++r) {
        run *= cert.at(k - v - r);
        s += run;
      }
      tail = s / (1.0 - *period_product);
    }
    if (tail) {
      out.tail_bound = tail;
      if (*tail <= tol) {
        out.converged = true;
        return out;
      }
    } else {
      small_run = prod < tol ? small_run + 1 : 0;
      if (small_run >= 10) {
        out.converged = true;
        return out;
      }
    }
  }
  return out;
}

}  // namespace apseq
