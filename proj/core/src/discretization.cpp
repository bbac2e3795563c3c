#include "apseq/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "apseq/errors.hpp"

namespace apseq {

namespace {

Matrix sine_basis(Index n) {
  Matrix q(n, n);
  const double scale = std::sqrt(2.0 / static_cast<double>(n + 1));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      q(i, j) = scale * std::sin(static_cast<double>((i + 1) * (j + 1)) * std::numbers::pi / static_cast<double>(n + 1));
    }
  }
  return q;
}

Matrix second_difference(Index n, double h) {
  Matrix m = Matrix::Zero(n, n);
  const double s = 1.0 / (h * h);
  for (Index i = 0; i < n; ++i) {
    m(i, i) = -2.0 * s;
    if (i > 0) m(i, i - 1) = s;
    if (i + 1 < n) m(i, i + 1) = s;
  }
  return m;
}

void require_domain(Scalar b) {
  if (!(b.real() > 0.0)) {
    throw DomainError("resolvent needs Re b > 0, got b = " + format_double(b.real()) + " + " +
                      format_double(b.imag()) + "i");
  }
}

std::string list_ks(const std::vector<long>& ks) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ks.size() && i < 10; ++i) out << (i ? ", " : "") << ks[i];
  if (ks.size() > 10) out << ", ... (" << ks.size() << " in total)";
  return out.str();
}

Window checked_range(Window window, std::optional<long> period) {
  if (period) {
    if (*period < 1) throw InputContractError("declared period must be positive");
    return Window{0, *period - 1};
  }
  return Window{window.lo - kHypothesisPad, window.hi + kHypothesisPad};
}

Scalar shift_at(const BiSequence& b, long k) {
  const Vector v = b(k);
  return v(0);
}

// Certificate per family member: sup-norm uses the closed form, others are exact.
Certificate grid_certificate(const Seminorm& kappa, std::function<double(long)> closed_form,
                             std::function<Matrix(long)> matrix, Window checked, std::optional<long> period) {
  Certificate c;
  if (kappa.kind() == SeminormKind::sup) {
    c.at = std::move(closed_form);
  } else {
    c.at = [matrix = std::move(matrix), kappa](long k) { return induced_bound(matrix(k), kappa); };
  }
  for (long k = checked.lo; k <= checked.hi; ++k) c.sup_bound = std::max(c.sup_bound, c.at(k));
  c.period = period;
  return c;
}

void check_shifts(const BiSequence& b, Window checked) {
  if (b.dim() != 1) throw ShapeError("shift sequence b must be scalar");
  std::vector<long> bad;
  for (long k = checked.lo; k <= checked.hi; ++k) {
    if (!(shift_at(b, k).real() > 0.0)) bad.push_back(k);
  }
  if (!bad.empty()) throw InputContractError("Re b(k) > 0 fails at k = " + list_ks(bad));
}

}  // namespace

std::vector<double> GridLaplacian::axis_eigenvalues() const {
  std::vector<double> out;
  for (Index j = 1; j <= n; ++j) {
    out.push_back((2.0 - 2.0 * std::cos(static_cast<double>(j) * std::numbers::pi / static_cast<double>(n + 1))) /
                  (h * h));
  }
  return out;
}

double GridLaplacian::min_eigenvalue() const {
  const double mu = axis_eigenvalues().front();
  return dims == 1 ? mu : 2.0 * mu;
}

GridLaplacian laplacian_1d(Index n, double h) {
  if (n < 1) throw InputContractError("laplacian_1d: n must be >= 1");
  if (!(h > 0.0)) throw InputContractError("laplacian_1d: h must be positive");
  return GridLaplacian{n, 1, h, second_difference(n, h)};
}

GridLaplacian laplacian_2d(Index n, double h) {
  if (n < 1 || n > kMax2dGrid) throw InputContractError("laplacian_2d: n must be in [1, 32]");
  if (!(h > 0.0)) throw InputContractError("laplacian_2d: h must be positive");
  const Matrix d1 = second_difference(n, h);
  Matrix m = Matrix::Zero(n * n, n * n);
  // (Delta_1 (x) I + I (x) Delta_1), row-major grid index i*n + j
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Index row = i * n + j;
      for (Index k = 0; k < n; ++k) {
        if (d1(i, k) != 0.0) m(row, k * n + j) += d1(i, k);
        if (d1(j, k) != 0.0) m(row, i * n + k) += d1(j, k);
      }
    }
  }
  return GridLaplacian{n, 2, h, m};
}

Vector resolvent_apply(const GridLaplacian& L, Scalar b, const Vector& y) {
  require_domain(b);
  if (y.size() != L.size()) throw ShapeError("resolvent_apply: vector has the wrong dimension");
  const Index n = L.n;
  const double s = 1.0 / (L.h * L.h);
  if (L.dims == 1) {
    // Thomas algorithm on diag b + 2s, off-diagonals -s (strictly diagonally dominant).
    std::vector<Scalar> c_prime(static_cast<std::size_t>(n));
    Vector x(n);
    const Scalar diag = b + 2.0 * s;
    const double off = -s;
    Scalar denom = diag;
    c_prime[0] = off / denom;
    x(0) = y(0) / denom;
    for (Index i = 1; i < n; ++i) {
      denom = diag - off * c_prime[static_cast<std::size_t>(i - 1)];
      c_prime[static_cast<std::size_t>(i)] = off / denom;
      x(i) = (y(i) - off * x(i - 1)) / denom;
    }
    for (Index i = n - 2; i >= 0; --i) x(i) -= c_prime[static_cast<std::size_t>(i)] * x(i + 1);
    return x;
  }
  const Matrix q = sine_basis(n);
  const std::vector<double> mu = L.axis_eigenvalues();
  Matrix grid(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) grid(i, j) = y(i * n + j);
  }
  Matrix spectral = q * grid * q;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      spectral(i, j) /= b + mu[static_cast<std::size_t>(i)] + mu[static_cast<std::size_t>(j)];
    }
  }
  const Matrix back = q * spectral * q;
  Vector x(n * n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) x(i * n + j) = back(i, j);
  }
  return x;
}

Matrix resolvent_matrix(const GridLaplacian& L, Scalar b) {
  require_domain(b);
  const Index d = L.size();
  Matrix out(d, d);
  for (Index j = 0; j < d; ++j) out.col(j) = resolvent_apply(L, b, Vector::Unit(d, j));
  return out;
}

double resolvent_norm_bound(const GridLaplacian& L, Scalar b) {
  require_domain(b);
  const std::vector<double> mu = L.axis_eigenvalues();
  double smallest = std::numeric_limits<double>::infinity();
  if (L.dims == 1) {
    for (const double m : mu) smallest = std::min(smallest, std::abs(b + m));
  } else {
    for (const double mi : mu) {
      for (const double mj : mu) smallest = std::min(smallest, std::abs(b + mi + mj));
    }
  }
  return 1.0 / smallest;
}

HeatInstance heat_problem(const GridLaplacian& L, const BiSequence& m, const BiSequence& b, const BiSequence& f,
                          const SeminormFamily& family, Window window, std::optional<long> period) {
  window.require_valid("heat_problem window");
  const Index d = L.size();
  if (m.dim() != d || f.dim() != d || family.dim() != d) throw ShapeError("heat_problem: grid dimensions differ");
  const Window checked = checked_range(window, period);
  check_shifts(b, checked);

  const Matrix delta = L.matrix;
  auto b_matrix = [m](long k) -> Matrix { return m(k).asDiagonal(); };
  auto resolvent = [L, b](long k) -> Matrix { return -resolvent_matrix(L, shift_at(b, k)); };
  OperatorSequence B = OperatorSequence::generator(d, b_matrix, period);
  OperatorSequence Ainv_C = OperatorSequence::generator(d, resolvent, period);
  const OperatorSequence A = OperatorSequence::generator(
      d, [delta, b](long k) -> Matrix { return delta - shift_at(b, k) * Matrix::Identity(delta.rows(), delta.cols()); },
      period);

  auto m_sup = [m](long k) { return m(k).cwiseAbs().maxCoeff(); };
  auto inv_re_b = [b](long k) { return 1.0 / shift_at(b, k).real(); };

  HeatInstance out{DegenerateVbProblem{B, Ainv_C, Matrix::Identity(d, d), A, f}, 0.0, checked};
  std::vector<long> bad;
  for (const auto& kappa : family) {
    const Certificate cb = grid_certificate(kappa, m_sup, b_matrix, checked, period);
    const Certificate ca = grid_certificate(kappa, inv_re_b, resolvent, checked, period);
    for (long k = checked.lo; k <= checked.hi; ++k) {
      const double composite = cb.at(k) * ca.at(k);
      out.certificate_sup = std::max(out.certificate_sup, composite);
      if (composite > kSmallnessLimit) bad.push_back(k);
    }
    B = B.with_certificate(kappa.label(), cb);
    Ainv_C = Ainv_C.with_certificate(kappa.label(), ca);
  }
  if (!bad.empty()) {
    std::sort(bad.begin(), bad.end());
    bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
    throw InputContractError("heat multipliers are not small enough (composite certificate > 0.9) at k = " +
                             list_ks(bad));
  }
  out.problem.B = B;
  out.problem.Ainv_C = Ainv_C;
  return out;
}

WaveInstance wave_problem(const GridLaplacian& L, const BiSequence& m1, const BiSequence& m2, const BiSequence& b,
                          const BiSequence& f, const SeminormFamily& family, Window window,
                          std::optional<long> period) {
  window.require_valid("wave_problem window");
  const Index d = L.size();
  if (m1.dim() != d || m2.dim() != d || f.dim() != d || family.dim() != d) {
    throw ShapeError("wave_problem: grid dimensions differ");
  }
  const Window checked = checked_range(window, period);
  check_shifts(b, checked);

  const Matrix delta = L.matrix;
  auto a1_matrix = [m1](long k) -> Matrix { return m1(k).asDiagonal(); };
  auto a2_matrix = [m2](long k) -> Matrix { return m2(k).asDiagonal(); };
  auto resolvent = [L, b](long k) -> Matrix { return resolvent_matrix(L, shift_at(b, k)); };
  OperatorSequence A1 = OperatorSequence::generator(d, a1_matrix, period);
  OperatorSequence A2 = OperatorSequence::generator(d, a2_matrix, period);
  OperatorSequence A0inv = OperatorSequence::generator(d, resolvent, period);
  const OperatorSequence A0 = OperatorSequence::generator(
      d, [delta, b](long k) -> Matrix { return shift_at(b, k) * Matrix::Identity(delta.rows(), delta.cols()) - delta; },
      period);

  auto m1_sup = [m1](long k) { return m1(k).cwiseAbs().maxCoeff(); };
  auto m2_sup = [m2](long k) { return m2(k).cwiseAbs().maxCoeff(); };
  auto inv_re_b = [b](long k) { return 1.0 / shift_at(b, k).real(); };

  WaveInstance out{SecondOrderProblem{A0, A1, A2, Matrix::Identity(d, d), std::nullopt, f}, 0.0, checked};
  std::vector<long> bad;
  for (const auto& kappa : family) {
    const Certificate c0 = grid_certificate(kappa, inv_re_b, resolvent, checked, period);
    const Certificate c1 = grid_certificate(kappa, m1_sup, a1_matrix, checked, period);
    const Certificate c2 = grid_certificate(kappa, m2_sup, a2_matrix, checked, period);
    for (long k = checked.lo; k <= checked.hi; ++k) {
      const double composite = c0.at(k) + c1.at(k) * c0.at(k) + c2.at(k + 1);
      out.certificate_sup = std::max(out.certificate_sup, composite);
      if (composite > kSmallnessLimit) bad.push_back(k);
    }
    A0inv = A0inv.with_certificate(kappa.label(), c0);
    A1 = A1.with_certificate(kappa.label(), c1);
    A2 = A2.with_certificate(kappa.label(), c2);
  }
  if (!bad.empty()) {
    std::sort(bad.begin(), bad.end());
    bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
    throw InputContractError("wave multipliers are not small enough (composite certificate > 0.9) at k = " +
                             list_ks(bad));
  }
  out.problem.A0inv_C = A0inv;
  out.problem.A1 = A1;
  out.problem.A2 = A2;
  return out;
}

}  // namespace apseq
