#include "apseq/seq_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <variant>

#include "apseq/errors.hpp"

namespace apseq {

void Window::require_valid(const char* what) const {
  if (!valid()) {
    throw InputContractError(std::string(what) + ": window start " + std::to_string(lo) +
                             " exceeds end " + std::to_string(hi));
  }
}

// ---------------------------------------------------------------------------
// Seminorm

Seminorm Seminorm::sup(std::string label) {
  Seminorm s;
  s.kind_ = SeminormKind::sup;
  s.label_ = std::move(label);
  return s;
}

Seminorm Seminorm::p_norm(double p, std::string label) {
  if (!(p >= 1.0)) throw InputContractError("p_norm requires p >= 1");
  Seminorm s;
  s.kind_ = SeminormKind::p_norm;
  s.p_ = p;
  s.label_ = std::move(label);
  return s;
}

Seminorm Seminorm::stencil(std::vector<StencilTap> taps, std::string label) {
  if (taps.empty()) throw InputContractError("stencil seminorm needs at least one tap");
  Seminorm s;
  s.kind_ = SeminormKind::stencil;
  s.taps_ = std::move(taps);
  s.label_ = std::move(label);
  return s;
}

Seminorm Seminorm::product(const Seminorm& base, Index blocks, std::string label) {
  if (blocks < 1) throw InputContractError("product seminorm needs at least one block");
  Seminorm s;
  s.kind_ = SeminormKind::product;
  s.blocks_ = blocks;
  s.base_ = std::make_shared<const Seminorm>(base);
  s.label_ = label.empty() ? base.label() : std::move(label);
  return s;
}

const Seminorm& Seminorm::base() const {
  if (!base_) throw InputContractError("seminorm '" + label_ + "' is not a product seminorm");
  return *base_;
}

Matrix Seminorm::stencil_matrix(Index d) const {
  Matrix s = Matrix::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    for (const auto& tap : taps_) {
      const Index j = i + tap.offset;
      if (j >= 0 && j < d) s(i, j) += tap.weight;
    }
  }
  return s;
}

double Seminorm::operator()(const Vector& x) const {
  switch (kind_) {
    case SeminormKind::sup:
      return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
    case SeminormKind::p_norm: {
      double acc = 0.0;
      for (Index i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i]), p_);
      return std::pow(acc, 1.0 / p_);
    }
    case SeminormKind::stencil: {
      double best = 0.0;
      const Index d = x.size();
      for (Index i = 0; i < d; ++i) {
        Scalar acc{};
        for (const auto& tap : taps_) {
          const Index j = i + tap.offset;
          if (j >= 0 && j < d) acc += tap.weight * x[j];
        }
        best = std::max(best, std::abs(acc));
      }
      return best;
    }
    case SeminormKind::product: {
      if (x.size() % blocks_ != 0) {
        throw ShapeError("product seminorm: vector length " + std::to_string(x.size()) +
                         " not divisible by " + std::to_string(blocks_) + " blocks");
      }
      const Index d = x.size() / blocks_;
      double acc = 0.0;
      for (Index b = 0; b < blocks_; ++b) acc += (*base_)(x.segment(b * d, d));
      return acc;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// SeminormFamily

SeminormFamily::SeminormFamily(std::vector<Seminorm> seminorms, Index dim)
    : seminorms_(std::move(seminorms)), dim_(dim) {
  if (seminorms_.empty()) throw InputContractError("seminorm family must be nonempty");
  if (dim_ < 1) throw InputContractError("seminorm family dimension must be >= 1");
  std::set<std::string> labels;
  for (const auto& s : seminorms_) {
    if (!labels.insert(s.label()).second) {
      throw InputContractError("duplicate seminorm label '" + s.label() + "'");
    }
  }
  for (Index i = 0; i < dim_; ++i) {
    const Vector e = Vector::Unit(dim_, i);
    const bool seen = std::any_of(seminorms_.begin(), seminorms_.end(),
                                  [&](const Seminorm& s) { return s(e) > 0.0; });
    if (!seen) {
      throw InputContractError("seminorm family is not separating: basis vector " +
                               std::to_string(i) + " has every seminorm zero");
    }
  }
}

const Seminorm& SeminormFamily::at(const std::string& label) const {
  for (const auto& s : seminorms_) {
    if (s.label() == label) return s;
  }
  throw InputContractError("unknown seminorm label '" + label + "'");
}

SeminormFamily SeminormFamily::lifted(Index blocks) const {
  std::vector<Seminorm> out;
  out.reserve(seminorms_.size());
  for (const auto& s : seminorms_) out.push_back(Seminorm::product(s, blocks));
  return SeminormFamily(std::move(out), dim_ * blocks);
}

// ---------------------------------------------------------------------------
// TrigPoly

Index TrigPoly::dim() const {
  if (terms.empty()) throw ShapeError("empty trigonometric polynomial has no dimension");
  return terms.front().coefficient.size();
}

Vector TrigPoly::operator()(long k) const {
  Vector out = Vector::Zero(dim());
  for (const auto& t : terms) {
    out += t.coefficient * std::polar(1.0, t.frequency * static_cast<double>(k));
  }
  return out;
}

// ---------------------------------------------------------------------------
// BiSequence

Scalar ipow(Scalar c, long n) {
  if (n < 0) return Scalar(1.0) / ipow(c, -n);
  Scalar result(1.0);
  Scalar base = c;
  auto e = static_cast<unsigned long>(n);
  while (e != 0) {
    if (e & 1UL) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

namespace {

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

struct TableBackend {
  long k_min;
  std::vector<Vector> values;
  Extension ext;
};
struct GeneratorBackend {
  std::function<Vector(long)> rule;
};
struct TrigBackend {
  TrigPoly poly;
};
struct OmegaCBackend {
  std::vector<Vector> base;
  long omega;
  Scalar c;
};

}  // namespace

struct BiSequence::Impl {
  Index dim;
  std::variant<TableBackend, GeneratorBackend, TrigBackend, OmegaCBackend> backend;
};

BiSequence::BiSequence(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

BiSequence BiSequence::table(long k_min, std::vector<Vector> values, Extension ext) {
  if (values.empty()) throw InputContractError("table sequence needs at least one value");
  const Index d = values.front().size();
  for (const auto& v : values) {
    if (v.size() != d) throw ShapeError("table sequence values have inconsistent dimensions");
  }
  return BiSequence(std::make_shared<const Impl>(Impl{d, TableBackend{k_min, std::move(values), ext}}));
}

BiSequence BiSequence::generator(Index dim, std::function<Vector(long)> rule) {
  return BiSequence(std::make_shared<const Impl>(Impl{dim, GeneratorBackend{std::move(rule)}}));
}

BiSequence BiSequence::trig_poly(TrigPoly poly) {
  const Index d = poly.dim();
  for (const auto& t : poly.terms) {
    if (t.coefficient.size() != d) throw ShapeError("trig_poly coefficients have inconsistent dimensions");
  }
  return BiSequence(std::make_shared<const Impl>(Impl{d, TrigBackend{std::move(poly)}}));
}

BiSequence BiSequence::omega_c(std::vector<Vector> base, long omega, Scalar c) {
  if (omega < 1) throw InputContractError("omega must be a positive integer");
  if (c == Scalar(0.0)) throw InputContractError("c must be nonzero");
  if (static_cast<long>(base.size()) != omega) {
    throw InputContractError("omega_c base window must hold exactly omega values");
  }
  const Index d = base.front().size();
  for (const auto& v : base) {
    if (v.size() != d) throw ShapeError("omega_c base values have inconsistent dimensions");
  }
  return BiSequence(std::make_shared<const Impl>(Impl{d, OmegaCBackend{std::move(base), omega, c}}));
}

BiSequence BiSequence::constant(Vector value) {
  const Index d = value.size();
  return generator(d, [value = std::move(value)](long) { return value; });
}

BiSequence BiSequence::zero(Index dim) { return constant(Vector::Zero(dim)); }

Index BiSequence::dim() const { return impl_->dim; }

std::optional<Window> BiSequence::stored_window() const {
  if (const auto* t = std::get_if<TableBackend>(&impl_->backend)) {
    return Window{t->k_min, t->k_min + static_cast<long>(t->values.size()) - 1};
  }
  return std::nullopt;
}

Vector BiSequence::operator()(long k) const {
  return std::visit(
      [&](const auto& b) -> Vector {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, TableBackend>) {
          const long n = static_cast<long>(b.values.size());
          const long i = k - b.k_min;
          if (i >= 0 && i < n) return b.values[static_cast<std::size_t>(i)];
          switch (b.ext) {
            case Extension::zero:
              return Vector::Zero(impl_->dim);
            case Extension::periodic: {
              const long r = i - floor_div(i, n) * n;
              return b.values[static_cast<std::size_t>(r)];
            }
            case Extension::none:
              break;
          }
          throw RangeError("table sequence evaluated at k=" + std::to_string(k) + " outside [" +
                           std::to_string(b.k_min) + ", " + std::to_string(b.k_min + n - 1) + "]");
        } else if constexpr (std::is_same_v<B, GeneratorBackend>) {
          Vector v = b.rule(k);
          if (v.size() != impl_->dim) throw ShapeError("generator returned a vector of the wrong dimension");
          return v;
        } else if constexpr (std::is_same_v<B, TrigBackend>) {
          return b.poly(k);
        } else {
          const long q = floor_div(k, b.omega);
          const long r = k - q * b.omega;
          return b.base[static_cast<std::size_t>(r)] * ipow(b.c, q);
        }
      },
      impl_->backend);
}

Vector seq_eval(const BiSequence& f, long k) { return f(k); }

BiSequence seq_axpy(Scalar alpha, const BiSequence& f, Scalar beta, const BiSequence& g) {
  if (f.dim() != g.dim()) {
    throw ShapeError("seq_axpy: dimension " + std::to_string(f.dim()) + " vs " + std::to_string(g.dim()));
  }
  return BiSequence::generator(f.dim(), [=](long k) -> Vector { return alpha * f(k) + beta * g(k); });
}

BiSequence seq_shift(const BiSequence& f, long tau) {
  return BiSequence::generator(f.dim(), [=](long k) { return f(k + tau); });
}

BiSequence seq_stack(std::span<const BiSequence> parts) {
  if (parts.empty()) throw InputContractError("seq_stack needs at least one part");
  std::vector<BiSequence> owned(parts.begin(), parts.end());
  Index total = 0;
  for (const auto& p : owned) total += p.dim();
  return BiSequence::generator(total, [owned, total](long k) {
    Vector out(total);
    Index at = 0;
    for (const auto& p : owned) {
      out.segment(at, p.dim()) = p(k);
      at += p.dim();
    }
    return out;
  });
}

double product_seminorm(std::span<const std::pair<Seminorm, Vector>> parts) {
  if (parts.empty()) throw InputContractError("product_seminorm needs at least one part");
  double acc = 0.0;
  for (const auto& [kappa, y] : parts) acc += kappa(y);
  return acc;
}

std::vector<Vector> sample(const BiSequence& f, Window w) {
  w.require_valid("sample");
  std::vector<Vector> out;
  out.reserve(w.size());
  for (long k = w.lo; k <= w.hi; ++k) out.push_back(f(k));
  return out;
}

// ---------------------------------------------------------------------------
// CSV

double reciprocal_condition(const Eigen::PartialPivLU<Matrix>& lu) {
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (pivots.size() == 0) return 1.0;
  if (!(pivots.minCoeff() > 0.0) || !pivots.allFinite()) return 0.0;
  const double r = lu.rcond();
  return std::isfinite(r) ? r : 0.0;
}

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

void write_csv(std::ostream& out, const BiSequence& f, Window w) {
  w.require_valid("write_csv");
  const Index d = f.dim();
  out << "k";
  for (Index i = 0; i < d; ++i) out << ",re_" << i << ",im_" << i;
  out << '\n';
  for (long k = w.lo; k <= w.hi; ++k) {
    const Vector v = f(k);
    out << k;
    for (Index i = 0; i < d; ++i) out << ',' << format_double(v[i].real()) << ',' << format_double(v[i].imag());
    out << '\n';
  }
}

BiSequence read_csv(std::istream& in, Extension ext) {
  std::string line;
  if (!std::getline(in, line)) throw InputContractError("read_csv: empty input");
  const auto columns = std::count(line.begin(), line.end(), ',');
  if (columns < 2 || columns % 2 != 0 || line.rfind("k,", 0) != 0) {
    throw InputContractError("read_csv: header must be k,re_0,im_0,...");
  }
  const Index d = columns / 2;

  std::vector<Vector> values;
  std::optional<long> k_min;
  long expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    const long k = std::stol(cell);
    if (!k_min) {
      k_min = k;
      expected = k;
    }
    if (k != expected) throw InputContractError("read_csv: rows must be consecutive in k");
    Vector v(d);
    for (Index i = 0; i < d; ++i) {
      std::string re, im;
      if (!std::getline(row, re, ',') || !std::getline(row, im, ',')) {
        throw InputContractError("read_csv: short row at k=" + std::to_string(k));
      }
      v[i] = Scalar(std::stod(re), std::stod(im));
    }
    values.push_back(std::move(v));
    ++expected;
  }
  if (!k_min) throw InputContractError("read_csv: no data rows");
  return BiSequence::table(*k_min, std::move(values), ext);
}

}  // namespace apseq
