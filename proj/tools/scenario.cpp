#include "scenario.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace apseq::scenario {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kProblems{"first_order",    "inclusion",    "degenerate_vb", "degenerate_vb1",
                                      "second_order",   "system_bm",    "heat",          "wave"};

[[noreturn]] void fail(const std::string& what) { throw InputContractError("config: " + what); }

// --- json <-> values -------------------------------------------------------

json scalar_json(Scalar z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

Scalar scalar_from(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  fail(where + ": expected a number or a [re, im] pair");
}

Row row_from(const json& j, const std::string& where) {
  if (j.is_number()) return {scalar_from(j, where)};
  if (!j.is_array()) fail(where + ": expected an array");
  // a bare [re, im] pair is ambiguous with a 2-vector; vectors must use nested pairs for complex entries
  Row out;
  for (const auto& e : j) out.push_back(scalar_from(e, where));
  return out;
}

json row_json(const Row& r) {
  json out = json::array();
  for (const auto& z : r) out.push_back(scalar_json(z));
  return out;
}

Rows rows_from(const json& j, const std::string& where) {
  if (j.is_number()) return {{scalar_from(j, where)}};
  if (!j.is_array() || j.empty()) fail(where + ": expected a nonempty array of rows");
  Rows out;
  for (const auto& r : j) {
    if (!r.is_array()) fail(where + ": rows must be arrays");
    out.push_back(row_from(r, where));
  }
  for (const auto& r : out) {
    if (r.size() != out.front().size()) fail(where + ": ragged rows");
  }
  return out;
}

json rows_json(const Rows& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back(row_json(r));
  return out;
}

Window window_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    fail(where + ": expected [start, end] integers");
  }
  const Window w{j[0].get<long>(), j[1].get<long>()};
  if (!w.valid()) fail(where + ": start " + std::to_string(w.lo) + " exceeds end " + std::to_string(w.hi));
  return w;
}

json window_json(Window w) { return json::array({w.lo, w.hi}); }

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) fail(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(where + "." + key + ": wrong type");
  }
}

std::vector<double> doubles_from(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) fail(where + ": expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// --- specs -------------------------------------------------------------------

OperatorSpec operator_from(const json& j, const std::string& where) {
  only_keys(j, {"kind", "matrix", "matrices", "frequencies", "phases", "period", "sup_bounds"}, where);
  OperatorSpec s;
  s.kind = get_or<std::string>(j, "kind", "constant", where);
  if (s.kind == "constant") {
    if (!j.contains("matrix")) fail(where + ": constant operator needs 'matrix'");
    s.matrices.push_back(rows_from(j["matrix"], where + ".matrix"));
  } else if (s.kind == "periodic" || s.kind == "trig" || s.kind == "generator") {
    if (!j.contains("matrices") || !j["matrices"].is_array() || j["matrices"].empty()) {
      fail(where + ": '" + s.kind + "' operator needs a nonempty 'matrices' array");
    }
    for (const auto& m : j["matrices"]) s.matrices.push_back(rows_from(m, where + ".matrices"));
  } else {
    fail(where + ": unknown operator kind '" + s.kind + "'");
  }
  if (j.contains("frequencies")) s.frequencies = doubles_from(j["frequencies"], where + ".frequencies");
  if (j.contains("phases")) s.phases = doubles_from(j["phases"], where + ".phases");
  if (j.contains("period")) s.period = get_or<long>(j, "period", 1, where);
  if (j.contains("sup_bounds")) {
    if (!j["sup_bounds"].is_object()) fail(where + ".sup_bounds: expected an object");
    for (const auto& [label, v] : j["sup_bounds"].items()) {
      if (!v.is_number()) fail(where + ".sup_bounds: expected numbers");
      s.sup_bounds[label] = v.get<double>();
    }
  }
  if (s.kind == "trig" && s.frequencies.size() != s.matrices.size()) {
    fail(where + ": trig operator needs one frequency per matrix");
  }
  if (s.kind == "generator") {
    if (s.frequencies.size() + 1 != s.matrices.size()) {
      fail(where + ": generator needs a base matrix plus one matrix per frequency");
    }
    if (!s.phases.empty() && s.phases.size() != s.frequencies.size()) fail(where + ": phases must match frequencies");
  }
  if (s.period && *s.period < 1) fail(where + ": period must be positive");
  return s;
}

json operator_json(const OperatorSpec& s) {
  json j;
  j["kind"] = s.kind;
  if (s.kind == "constant") {
    j["matrix"] = rows_json(s.matrices.front());
  } else {
    json ms = json::array();
    for (const auto& m : s.matrices) ms.push_back(rows_json(m));
    j["matrices"] = ms;
  }
  if (!s.frequencies.empty()) j["frequencies"] = s.frequencies;
  if (!s.phases.empty()) j["phases"] = s.phases;
  if (s.period) j["period"] = *s.period;
  if (!s.sup_bounds.empty()) j["sup_bounds"] = s.sup_bounds;
  return j;
}

SequenceSpec sequence_from(const json& j, const std::string& where) {
  only_keys(j, {"kind", "value", "values", "frequencies", "k_min", "extension", "omega", "c", "dim"}, where);
  SequenceSpec s;
  s.kind = get_or<std::string>(j, "kind", "constant", where);
  if (s.kind == "constant") {
    if (!j.contains("value")) fail(where + ": constant sequence needs 'value'");
    s.values.push_back(row_from(j["value"], where + ".value"));
  } else if (s.kind == "zero") {
    s.dim = get_or<long>(j, "dim", 0, where);
    if (s.dim < 1) fail(where + ": zero sequence needs a positive 'dim'");
  } else if (s.kind == "table" || s.kind == "trig_poly" || s.kind == "omega_c") {
    if (!j.contains("values")) fail(where + ": '" + s.kind + "' sequence needs 'values'");
    s.values = rows_from(j["values"], where + ".values");
  } else {
    fail(where + ": unknown sequence kind '" + s.kind + "'");
  }
  if (j.contains("frequencies")) s.frequencies = doubles_from(j["frequencies"], where + ".frequencies");
  s.k_min = get_or<long>(j, "k_min", 0, where);
  s.extension = get_or<std::string>(j, "extension", "none", where);
  if (s.extension != "none" && s.extension != "zero" && s.extension != "periodic") {
    fail(where + ": extension must be none, zero or periodic");
  }
  s.omega = get_or<long>(j, "omega", 1, where);
  if (j.contains("c")) s.c = scalar_from(j["c"], where + ".c");
  // fields that do not apply to the kind are dropped so serialize/parse is an identity
  if (s.kind != "table") {
    s.k_min = 0;
    s.extension = "none";
  }
  if (s.kind != "omega_c") {
    s.omega = 1;
    s.c = Scalar{1.0, 0.0};
  }
  if (s.kind == "trig_poly" && s.frequencies.size() != s.values.size()) {
    fail(where + ": trig_poly needs one frequency per coefficient");
  }
  if (s.kind == "omega_c" && (s.omega < 1 || static_cast<long>(s.values.size()) != s.omega)) {
    fail(where + ": omega_c needs omega >= 1 base values");
  }
  return s;
}

json sequence_json(const SequenceSpec& s) {
  json j;
  j["kind"] = s.kind;
  if (s.kind == "constant") j["value"] = row_json(s.values.front());
  if (s.kind == "zero") j["dim"] = s.dim;
  if (s.kind == "table" || s.kind == "trig_poly" || s.kind == "omega_c") j["values"] = rows_json(s.values);
  if (!s.frequencies.empty()) j["frequencies"] = s.frequencies;
  if (s.kind == "table") {
    j["k_min"] = s.k_min;
    j["extension"] = s.extension;
  }
  if (s.kind == "omega_c") {
    j["omega"] = s.omega;
    j["c"] = scalar_json(s.c);
  }
  return j;
}

SeminormSpec seminorm_from(const json& j, const std::string& where) {
  only_keys(j, {"kind", "label", "p", "taps"}, where);
  SeminormSpec s;
  s.kind = get_or<std::string>(j, "kind", "sup", where);
  s.label = get_or<std::string>(j, "label", s.kind, where);
  if (s.kind == "p_norm") {
    s.p = get_or<double>(j, "p", 2.0, where);
    if (!(s.p >= 1.0)) fail(where + ": p must be >= 1");
  } else if (s.kind == "stencil") {
    if (!j.contains("taps") || !j["taps"].is_array() || j["taps"].empty()) fail(where + ": stencil needs taps");
    for (const auto& t : j["taps"]) {
      only_keys(t, {"offset", "weight"}, where + ".taps");
      s.offsets.push_back(get_or<long>(t, "offset", 0, where));
      if (!t.contains("weight")) fail(where + ".taps: missing weight");
      s.weights.push_back(scalar_from(t["weight"], where + ".taps.weight"));
    }
  } else if (s.kind != "sup") {
    fail(where + ": unknown seminorm kind '" + s.kind + "'");
  }
  return s;
}

json seminorm_json(const SeminormSpec& s) {
  json j{{"kind", s.kind}, {"label", s.label}};
  if (s.kind == "p_norm") j["p"] = s.p;
  if (s.kind == "stencil") {
    json taps = json::array();
    for (std::size_t i = 0; i < s.offsets.size(); ++i) {
      taps.push_back({{"offset", s.offsets[i]}, {"weight", scalar_json(s.weights[i])}});
    }
    j["taps"] = taps;
  }
  return j;
}

// --- runtime objects ----------------------------------------------------------

Matrix to_matrix(const Rows& rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

Vector to_vector(const Row& row) {
  Vector v(static_cast<Index>(row.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = row[static_cast<std::size_t>(i)];
  return v;
}

SeminormFamily build_family(const ScenarioConfig& c, Index dim) {
  std::vector<Seminorm> out;
  for (const auto& s : c.seminorms) {
    if (s.kind == "sup") {
      out.push_back(Seminorm::sup(s.label));
    } else if (s.kind == "p_norm") {
      out.push_back(Seminorm::p_norm(s.p, s.label));
    } else {
      std::vector<StencilTap> taps;
      for (std::size_t i = 0; i < s.offsets.size(); ++i) taps.push_back({s.offsets[i], s.weights[i]});
      out.push_back(Seminorm::stencil(std::move(taps), s.label));
    }
  }
  return SeminormFamily(std::move(out), dim);
}

OperatorSequence build_operator(const OperatorSpec& s, const SeminormFamily* family) {
  std::vector<Matrix> ms;
  for (const auto& r : s.matrices) ms.push_back(to_matrix(r));
  for (const auto& m : ms) {
    if (m.rows() != m.cols() || m.rows() != ms.front().rows()) throw ShapeError("operator matrices must be square and equal-sized");
  }
  OperatorSequence op = OperatorSequence::constant(ms.front());
  std::map<std::string, double> bounds = s.sup_bounds;
  if (s.kind == "periodic") {
    op = OperatorSequence::periodic(ms);
  } else if (s.kind == "trig") {
    std::vector<std::pair<double, Matrix>> terms;
    for (std::size_t i = 0; i < ms.size(); ++i) terms.emplace_back(s.frequencies[i], ms[i]);
    op = OperatorSequence::trig(std::move(terms));
  } else if (s.kind == "generator") {
    const std::vector<double> freq = s.frequencies;
    const std::vector<double> phase = s.phases.empty() ? std::vector<double>(freq.size(), 0.0) : s.phases;
    op = OperatorSequence::generator(
        ms.front().rows(),
        [ms, freq, phase](long k) -> Matrix {
          Matrix a = ms.front();
          for (std::size_t j = 0; j < freq.size(); ++j) a += ms[j + 1] * std::cos(freq[j] * static_cast<double>(k) + phase[j]);
          return a;
        },
        s.period);
    if (family && !s.period) {
      for (const auto& kappa : *family) {
        if (bounds.contains(kappa.label())) continue;
        double total = 0.0;
        for (const auto& m : ms) total += induced_bound(m, kappa);
        bounds[kappa.label()] = total;
      }
    }
  }
  if (!family) return op;
  return op.certified(*family, bounds);
}

BiSequence build_sequence(const SequenceSpec& s) {
  if (s.kind == "constant") return BiSequence::constant(to_vector(s.values.front()));
  if (s.kind == "zero") return BiSequence::zero(s.dim);
  std::vector<Vector> vs;
  for (const auto& r : s.values) vs.push_back(to_vector(r));
  if (s.kind == "table") {
    const Extension ext = s.extension == "zero" ? Extension::zero
                          : s.extension == "periodic" ? Extension::periodic
                                                      : Extension::none;
    return BiSequence::table(s.k_min, std::move(vs), ext);
  }
  if (s.kind == "trig_poly") {
    TrigPoly p;
    for (std::size_t i = 0; i < vs.size(); ++i) p.terms.push_back({s.frequencies[i], vs[i]});
    return BiSequence::trig_poly(std::move(p));
  }
  return BiSequence::omega_c(std::move(vs), s.omega, s.c);
}

BiSequence broadcast(const BiSequence& s, Index dim) {
  if (s.dim() == dim) return s;
  if (s.dim() != 1) throw ShapeError("grid field must have dimension 1 or the grid size");
  return BiSequence::generator(dim, [s, dim](long k) -> Vector { return Vector::Constant(dim, s(k)(0)); });
}

const OperatorSpec& need_op(const ScenarioConfig& c, const std::string& name) {
  auto it = c.operators.find(name);
  if (it == c.operators.end()) fail("problem '" + c.problem + "' needs operator '" + name + "'");
  return it->second;
}

const SequenceSpec& need_seq(const ScenarioConfig& c, const std::string& name) {
  auto it = c.sequences.find(name);
  if (it == c.sequences.end()) fail("problem '" + c.problem + "' needs sequence '" + name + "'");
  return it->second;
}

const SequenceSpec& need_field(const GridSpec& g, const std::string& name) {
  auto it = g.fields.find(name);
  if (it == g.fields.end()) fail("grid needs field '" + name + "'");
  return it->second;
}

Index spec_dim(const OperatorSpec& s) { return static_cast<Index>(s.matrices.front().size()); }

Matrix regularizer(const ScenarioConfig& c, Index d) {
  if (!c.C) return Matrix::Identity(d, d);
  Matrix m = to_matrix(*c.C);
  if (m.rows() != d || m.cols() != d) throw ShapeError("regularizer C has the wrong shape");
  return m;
}

GridLaplacian build_grid(const GridSpec& g) {
  return g.dims == 1 ? laplacian_1d(g.n, g.h) : laplacian_2d(g.n, g.h);
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string matrix_text(const Matrix& m) {
  std::ostringstream out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      out << (j ? " " : "") << format_double(m(i, j).real());
      if (m(i, j).imag() != 0.0) out << (m(i, j).imag() < 0 ? "" : "+") << format_double(m(i, j).imag()) << "i";
    }
    out << "\n";
  }
  return out.str();
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(scalar_json(m(i, j)));
    out.push_back(row);
  }
  return out;
}

void write_grid_csv(std::ostream& out, const BiSequence& x, Window w) {
  out << "k,index,re,im\n";
  for (long k = w.lo; k <= w.hi; ++k) {
    const Vector v = x(k);
    for (Index i = 0; i < v.size(); ++i) {
      out << k << ',' << i << ',' << format_double(v(i).real()) << ',' << format_double(v(i).imag()) << '\n';
    }
  }
}

struct Outcome {
  std::optional<BiSequence> x;
  bool grid_csv = false;
  std::optional<SolveReport> report;
  json extra = json::object();
  std::vector<std::string> summary;
};

SolveOptions solve_options(const ScenarioConfig& c, unsigned threads) {
  SolveOptions o;
  o.tol = c.tol;
  o.v_max = c.v_max;
  o.threads = threads;
  if (c.omega_c) o.periodicity = OmegaCRequest{c.omega_c->omega, c.omega_c->c};
  if (c.bohr) o.bohr = BohrRequest{c.bohr->seminorm, c.bohr->epsilon, c.bohr->k_window, c.bohr->tau_range, c.bohr->L};
  return o;
}

json besicovitch_json(const ScenarioConfig& c, const BiSequence& x, const SeminormFamily& family) {
  const BesicovitchSpec& b = *c.besicovitch;
  if (b.frequencies.empty()) fail("analysis.besicovitch needs frequencies for the trigonometric fit");
  const std::string label = b.seminorm.empty() ? family.seminorms().front().label() : b.seminorm;
  const BiSequence poly = BiSequence::trig_poly(fit_trig_poly(x, b.frequencies, b.fit_N));
  return to_json(besicovitch_distance(x, poly, family.at(label), b.p, b.l_grid));
}

Outcome dispatch(const ScenarioConfig& c, const RunOptions& run) {
  const SolveOptions opts = solve_options(c, run.threads);
  Outcome out;
  const std::string& kind = c.problem;

  if (kind == "first_order") {
    const OperatorSpec& a = need_op(c, "A");
    const SeminormFamily family = build_family(c, spec_dim(a));
    const OperatorSequence A = build_operator(a, &family);
    Solution s = solve_series(A, build_sequence(need_seq(c, "f")), family, c.window, opts);
    out.x = s.x;
    out.report = std::move(s.report);
  } else if (kind == "inclusion") {
    const bool has_d = c.operators.contains("D");
    const OperatorSpec& spec = has_d ? need_op(c, "D") : need_op(c, "A");
    const Index d = spec_dim(spec);
    const SeminormFamily family = build_family(c, d);
    const Matrix C = regularizer(c, d);
    ResolventSelection sel{OperatorSequence::constant(Matrix::Zero(d, d)), C, "supplied selection D(k)"};
    std::optional<double> consistency;
    if (has_d) {
      sel.D = build_operator(spec, &family);
    } else {
      const OperatorSequence A = build_operator(spec, nullptr);
      sel = selection_from_operator(A, C, family, spec.sup_bounds);
      consistency = selection_consistency(A, sel, c.window);
    }
    Solution s = solve_inclusion(sel, build_sequence(need_seq(c, "f")), family, c.window, opts);
    if (consistency) s.report.diagnostics["selection_consistency"] = *consistency;
    out.x = s.x;
    out.report = std::move(s.report);
  } else if (kind == "degenerate_vb") {
    const OperatorSpec& b = need_op(c, "B");
    const Index d = spec_dim(b);
    const SeminormFamily family = build_family(c, d);
    const Matrix C = regularizer(c, d);
    std::optional<OperatorSequence> A;
    if (c.operators.contains("A")) A = build_operator(need_op(c, "A"), nullptr);
    OperatorSequence Ainv_C = OperatorSequence::constant(Matrix::Zero(d, d));
    if (c.operators.contains("Ainv_C")) {
      Ainv_C = build_operator(need_op(c, "Ainv_C"), &family);
    } else if (A) {
      Ainv_C = selection_from_operator(*A, C, family, need_op(c, "A").sup_bounds).D;
    } else {
      fail("degenerate_vb needs 'Ainv_C' or 'A'");
    }
    const DegenerateVbProblem problem{build_operator(b, &family), Ainv_C, C, A, build_sequence(need_seq(c, "f"))};
    VbSolution s = solve_degenerate_vb(problem, family, c.window, opts);
    out.x = s.u;
    out.report = std::move(s.report);
    out.extra["B_invertible"] = s.B_invertible;
  } else if (kind == "degenerate_vb1") {
    const OperatorSpec& b = need_op(c, "B");
    const Index d = spec_dim(b);
    const SeminormFamily family = build_family(c, d);
    const Matrix C = regularizer(c, d);
    const OperatorSequence B = build_operator(b, &family);
    std::optional<OperatorSequence> A;
    if (c.operators.contains("A")) A = build_operator(need_op(c, "A"), nullptr);
    OperatorSequence Ainv_BC = OperatorSequence::constant(Matrix::Zero(d, d));
    if (c.operators.contains("Ainv_BC")) {
      Ainv_BC = build_operator(need_op(c, "Ainv_BC"), &family);
    } else if (A) {
      // [A(k)]^{-1} B(k+1) C as the selection of A against the shifted regularizer
      const OperatorSequence Ak = *A;
      std::optional<long> per;
      if (Ak.period() && B.period()) per = std::lcm(*Ak.period(), *B.period());
      const OperatorSequence rhs = OperatorSequence::generator(
          d, [B, C](long k) -> Matrix { return B.at(k + 1) * C; }, B.period());
      const OperatorSequence solved = OperatorSequence::generator(
          d,
          [Ak, rhs](long k) -> Matrix {
            Eigen::PartialPivLU<Matrix> lu(Ak.at(k));
            if (!(reciprocal_condition(lu) >= 1e-12)) throw NumericError("A(k) is singular at k=" + std::to_string(k));
            return lu.solve(rhs.at(k));
          },
          per);
      Ainv_BC = solved.certified(family, need_op(c, "A").sup_bounds);
    } else {
      fail("degenerate_vb1 needs 'Ainv_BC' or 'A'");
    }
    const DegenerateVb1Problem problem{B, Ainv_BC, C, A, build_sequence(need_seq(c, "g")),
                                       build_sequence(need_seq(c, "f"))};
    Solution s = solve_degenerate_vb1(problem, family, c.window, opts);
    out.x = s.x;
    out.report = std::move(s.report);
  } else if (kind == "second_order") {
    const OperatorSpec& a0 = need_op(c, "A0");
    const Index d = spec_dim(a0);
    const SeminormFamily family = build_family(c, d);
    SecondOrderProblem problem{build_operator(a0, nullptr),
                               build_operator(need_op(c, "A1"), &family),
                               build_operator(need_op(c, "A2"), &family),
                               regularizer(c, d),
                               std::nullopt,
                               build_sequence(need_seq(c, "f"))};
    if (c.operators.contains("A0inv_C")) problem.A0inv_C = build_operator(need_op(c, "A0inv_C"), &family);
    SecondOrderSolution s = solve_higher_order(c.order, problem, family, c.window, opts);
    out.x = s.u;
    out.report = std::move(s.report);
  } else if (kind == "system_bm") {
    const OperatorSpec& a = need_op(c, "A");
    const Index d = spec_dim(a);
    const SeminormFamily family = build_family(c, d);
    Solution s = solve_system_bm(build_operator(a, nullptr), build_operator(need_op(c, "D"), &family), c.order,
                                 build_sequence(need_seq(c, "f")), family, c.window, opts);
    out.x = s.x;
    out.report = std::move(s.report);
  } else if (kind == "heat" || kind == "wave") {
    if (!c.grid) fail("problem '" + kind + "' needs a 'grid' section");
    const GridSpec& g = *c.grid;
    const GridLaplacian L = build_grid(g);
    const Index d = L.size();
    const SeminormFamily family = build_family(c, d);
    const BiSequence b = build_sequence(need_field(g, "b"));
    const BiSequence f = broadcast(build_sequence(need_seq(c, "f")), d);
    if (kind == "heat") {
      const HeatInstance inst =
          heat_problem(L, broadcast(build_sequence(need_field(g, "m")), d), b, f, family, c.window, g.period);
      VbSolution s = solve_degenerate_vb(inst.problem, family, c.window, opts);
      s.report.diagnostics["hypothesis_certificate_sup"] = inst.certificate_sup;
      out.x = s.u;
      out.report = std::move(s.report);
    } else {
      const WaveInstance inst = wave_problem(L, broadcast(build_sequence(need_field(g, "m1")), d),
                                             broadcast(build_sequence(need_field(g, "m2")), d), b, f, family,
                                             c.window, g.period);
      SecondOrderSolution s = solve_second_order(inst.problem, family, c.window, opts);
      s.report.diagnostics["hypothesis_certificate_sup"] = inst.certificate_sup;
      out.x = s.u;
      out.report = std::move(s.report);
    }
    out.grid_csv = true;
  }

  if (c.besicovitch && out.x) {
    const Index d = out.x->dim();
    out.extra["besicovitch"] = besicovitch_json(c, *out.x, build_family(c, d));
  }
  if (out.report) {
    const SolveReport& r = *out.report;
    out.summary.push_back("window: [" + std::to_string(r.window.lo) + ", " + std::to_string(r.window.hi) + "]");
    out.summary.push_back("max truncation depth: " +
                          std::to_string(*std::max_element(r.truncation_V.begin(), r.truncation_V.end())));
    for (const auto& [label, v] : r.max_residual) out.summary.push_back("max residual [" + label + "]: " + format_double(v));
    for (const auto& [label, v] : r.certificate_sup) out.summary.push_back("certificate sup [" + label + "]: " + format_double(v));
    out.summary.push_back("uniqueness: " + r.uniqueness);
    if (r.periodicity_defect) out.summary.push_back("(omega,c) defect: " + format_double(*r.periodicity_defect));
    if (r.ap_report) {
      out.extra["bohr"] = to_json(*r.ap_report);
      out.summary.push_back(std::string("bohr verdict: ") + (r.ap_report->verdict ? "true" : "false") +
                            " (max defect " + format_double(r.ap_report->max_defect) + ", epsilon " +
                            format_double(r.ap_report->epsilon) + ")");
    }
  }
  return out;
}

Outcome reduce(const ScenarioConfig& c) {
  Outcome out;
  json steps = json::array();
  if (c.problem == "second_order") {
    const int p = c.order;
    std::vector<OperatorSequence> coeffs;
    for (int j = 0; j <= p; ++j) coeffs.push_back(build_operator(need_op(c, "A" + std::to_string(j)), nullptr));
    const Index d = coeffs.front().dim();
    const Matrix C = regularizer(c, d);
    const CompanionSystem sys = build_companion(p, coeffs, C);
    std::optional<OperatorSequence> r;
    if (c.operators.contains("A0inv_C")) {
      r = build_operator(need_op(c, "A0inv_C"), nullptr);
    } else {
      const OperatorSequence a0 = coeffs.front();
      r = OperatorSequence::generator(
          d,
          [a0, C](long k) -> Matrix {
            Eigen::PartialPivLU<Matrix> lu(a0.at(k));
            if (!(reciprocal_condition(lu) >= 1e-12)) throw NumericError("A0(k) is singular at k=" + std::to_string(k));
            return lu.solve(C);
          },
          a0.period());
    }
    for (long k = c.window.lo; k <= c.window.hi; ++k) {
      steps.push_back({{"k", k},
                       {"bold_A", matrix_json(sys.bold_A.at(k))},
                       {"bold_B", matrix_json(sys.bold_B.at(k))},
                       {"D", matrix_json(companion_D_block(sys, *r, k))}});
    }
    out.extra["companion"] = steps;
    out.summary.push_back("companion order p = " + std::to_string(p) + ", block size " + std::to_string(d));
    out.summary.push_back("D(k) = B(k)[A(k)]^{-1}C at k = " + std::to_string(c.window.lo) + ":");
    out.summary.push_back(matrix_text(companion_D_block(sys, *r, c.window.lo)));
    if (p >= 3) out.summary.push_back("note: the almost periodic solver is available for p = 2 only");
  } else if (c.problem == "system_bm") {
    const OperatorSequence A = build_operator(need_op(c, "A"), nullptr);
    const OperatorSequence D = build_operator(need_op(c, "D"), nullptr);
    const BmReduction bm = build_B_from_D(A, D, c.order, c.window);
    for (long k = c.window.lo; k <= c.window.hi; ++k) {
      steps.push_back({{"k", k}, {"B_next", matrix_json(bm.B.at(k + 1))}});
    }
    out.extra["B"] = steps;
    out.extra["budget"] = bm.budget;
    out.extra["budget_limit"] = bm.budget_limit;
    out.extra["budget_ok"] = bm.budget_ok;
    out.summary.push_back("block budget sum ||D_ij|| = " + format_double(bm.budget) + " (limit " +
                          format_double(bm.budget_limit) + ")" + (bm.budget_ok ? "" : " WARNING: exceeded"));
  } else {
    fail("reduce-order applies to second_order and system_bm problems");
  }
  return out;
}

Outcome analyze(const ScenarioConfig& c, const RunOptions& run) {
  Outcome out;
  BiSequence s = BiSequence::zero(1);
  if (run.input_csv) {
    std::ifstream in(*run.input_csv);
    if (!in) fail("cannot open input CSV " + run.input_csv->string());
    s = read_csv(in);
  } else {
    s = build_sequence(need_seq(c, "f"));
  }
  const SeminormFamily family = build_family(c, s.dim());
  out.x = s;
  if (c.bohr) {
    const std::string label = c.bohr->seminorm.empty() ? family.seminorms().front().label() : c.bohr->seminorm;
    const APReport r =
        bohr_check(s, family.at(label), c.bohr->epsilon, c.bohr->k_window, c.bohr->tau_range, c.bohr->L, run.threads);
    out.extra["bohr"] = to_json(r);
    out.summary.push_back(std::string("bohr verdict: ") + (r.verdict ? "true" : "false") + " (max defect " +
                          format_double(r.max_defect) + ")");
  }
  if (c.besicovitch) {
    out.extra["besicovitch"] = besicovitch_json(c, s, family);
    out.summary.push_back("besicovitch limsup estimate: " +
                          format_double(out.extra["besicovitch"]["limsup_estimate"].get<double>()));
  }
  if (c.omega_c) {
    const Window w{c.window.lo, std::max(c.window.lo, c.window.hi - c.omega_c->omega)};
    const double defect = omega_c_check(s, c.omega_c->omega, c.omega_c->c, family, w);
    out.extra["omega_c_defect"] = defect;
    out.summary.push_back("(omega,c) defect: " + format_double(defect));
  }
  return out;
}

bool command_accepts(const std::string& command, const std::string& problem) {
  if (command == "solve" || command == "analyze") return true;
  if (command == "solve-inclusion") return problem == "inclusion";
  if (command == "solve-degenerate") return problem == "degenerate_vb" || problem == "degenerate_vb1" || problem == "system_bm" || problem == "heat";
  if (command == "solve-p2") return problem == "second_order" || problem == "wave";
  if (command == "reduce-order") return problem == "second_order" || problem == "system_bm";
  return false;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

// ---------------------------------------------------------------------------

ScenarioConfig parse(const json& doc) {
  only_keys(doc, {"schema_version", "problem", "window", "tol", "v_max", "order", "seminorms", "operators", "C",
                  "sequences", "grid", "analysis"},
            "root");
  ScenarioConfig c;
  if (!doc.contains("schema_version")) fail("missing schema_version");
  c.schema_version = get_or<int>(doc, "schema_version", 0, "root");
  if (c.schema_version != kSchemaVersion) fail("unsupported schema_version " + std::to_string(c.schema_version));
  c.problem = get_or<std::string>(doc, "problem", "", "root");
  if (!kProblems.contains(c.problem)) fail("unknown problem kind '" + c.problem + "'");
  if (doc.contains("window")) c.window = window_from(doc["window"], "window");
  c.tol = get_or<double>(doc, "tol", kDefaultSolveTol, "root");
  if (!(c.tol > 0.0)) fail("tol must be positive");
  c.v_max = get_or<long>(doc, "v_max", kDefaultVMax, "root");
  if (c.v_max < 1) fail("v_max must be >= 1");
  c.order = get_or<int>(doc, "order", 2, "root");
  if (c.order < 1) fail("order must be >= 1");
  if (doc.contains("seminorms")) {
    if (!doc["seminorms"].is_array() || doc["seminorms"].empty()) fail("seminorms must be a nonempty array");
    c.seminorms.clear();
    for (const auto& s : doc["seminorms"]) c.seminorms.push_back(seminorm_from(s, "seminorms"));
  }
  if (doc.contains("operators")) {
    if (!doc["operators"].is_object()) fail("operators must be an object");
    for (const auto& [name, spec] : doc["operators"].items()) c.operators[name] = operator_from(spec, "operators." + name);
  }
  if (doc.contains("C")) c.C = rows_from(doc["C"], "C");
  if (doc.contains("sequences")) {
    if (!doc["sequences"].is_object()) fail("sequences must be an object");
    for (const auto& [name, spec] : doc["sequences"].items()) c.sequences[name] = sequence_from(spec, "sequences." + name);
  }
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    only_keys(g, {"n", "h", "dims", "fields", "period"}, "grid");
    GridSpec spec;
    spec.n = get_or<long>(g, "n", 5, "grid");
    spec.h = get_or<double>(g, "h", 1.0, "grid");
    spec.dims = get_or<int>(g, "dims", 1, "grid");
    if (spec.dims != 1 && spec.dims != 2) fail("grid.dims must be 1 or 2");
    if (g.contains("period")) spec.period = get_or<long>(g, "period", 1, "grid");
    if (g.contains("fields")) {
      if (!g["fields"].is_object()) fail("grid.fields must be an object");
      for (const auto& [name, s] : g["fields"].items()) spec.fields[name] = sequence_from(s, "grid.fields." + name);
    }
    c.grid = spec;
  }
  if (doc.contains("analysis")) {
    const json& a = doc["analysis"];
    only_keys(a, {"bohr", "besicovitch", "omega_c"}, "analysis");
    if (a.contains("bohr")) {
      const json& b = a["bohr"];
      only_keys(b, {"seminorm", "epsilon", "L", "k_window", "tau_range"}, "analysis.bohr");
      BohrSpec s;
      s.seminorm = get_or<std::string>(b, "seminorm", "", "analysis.bohr");
      s.epsilon = get_or<double>(b, "epsilon", 0.0, "analysis.bohr");
      s.L = get_or<long>(b, "L", 1, "analysis.bohr");
      if (b.contains("k_window")) s.k_window = window_from(b["k_window"], "analysis.bohr.k_window");
      if (b.contains("tau_range")) s.tau_range = window_from(b["tau_range"], "analysis.bohr.tau_range");
      c.bohr = s;
    }
    if (a.contains("besicovitch")) {
      const json& b = a["besicovitch"];
      only_keys(b, {"seminorm", "p", "l_grid", "frequencies", "fit_N"}, "analysis.besicovitch");
      BesicovitchSpec s;
      s.seminorm = get_or<std::string>(b, "seminorm", "", "analysis.besicovitch");
      s.p = get_or<double>(b, "p", 1.0, "analysis.besicovitch");
      if (b.contains("l_grid")) s.l_grid = get_or<std::vector<long>>(b, "l_grid", {}, "analysis.besicovitch");
      if (b.contains("frequencies")) s.frequencies = doubles_from(b["frequencies"], "analysis.besicovitch.frequencies");
      s.fit_N = get_or<long>(b, "fit_N", 512, "analysis.besicovitch");
      c.besicovitch = s;
    }
    if (a.contains("omega_c")) {
      const json& o = a["omega_c"];
      only_keys(o, {"omega", "c"}, "analysis.omega_c");
      OmegaCSpec s;
      s.omega = get_or<long>(o, "omega", 1, "analysis.omega_c");
      if (o.contains("c")) s.c = scalar_from(o["c"], "analysis.omega_c.c");
      c.omega_c = s;
    }
  }
  return c;
}

ScenarioConfig parse_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path.string() + ": " + e.what());
  }
  return parse(doc);
}

json serialize(const ScenarioConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["problem"] = c.problem;
  j["window"] = window_json(c.window);
  j["tol"] = c.tol;
  j["v_max"] = c.v_max;
  j["order"] = c.order;
  json sn = json::array();
  for (const auto& s : c.seminorms) sn.push_back(seminorm_json(s));
  j["seminorms"] = sn;
  if (!c.operators.empty()) {
    json ops = json::object();
    for (const auto& [name, s] : c.operators) ops[name] = operator_json(s);
    j["operators"] = ops;
  }
  if (c.C) j["C"] = rows_json(*c.C);
  if (!c.sequences.empty()) {
    json seqs = json::object();
    for (const auto& [name, s] : c.sequences) seqs[name] = sequence_json(s);
    j["sequences"] = seqs;
  }
  if (c.grid) {
    json g{{"n", c.grid->n}, {"h", c.grid->h}, {"dims", c.grid->dims}};
    if (c.grid->period) g["period"] = *c.grid->period;
    json fields = json::object();
    for (const auto& [name, s] : c.grid->fields) fields[name] = sequence_json(s);
    g["fields"] = fields;
    j["grid"] = g;
  }
  if (c.bohr || c.besicovitch || c.omega_c) {
    json a = json::object();
    if (c.bohr) {
      a["bohr"] = {{"seminorm", c.bohr->seminorm},
                   {"epsilon", c.bohr->epsilon},
                   {"L", c.bohr->L},
                   {"k_window", window_json(c.bohr->k_window)},
                   {"tau_range", window_json(c.bohr->tau_range)}};
    }
    if (c.besicovitch) {
      a["besicovitch"] = {{"seminorm", c.besicovitch->seminorm},
                          {"p", c.besicovitch->p},
                          {"l_grid", c.besicovitch->l_grid},
                          {"frequencies", c.besicovitch->frequencies},
                          {"fit_N", c.besicovitch->fit_N}};
    }
    if (c.omega_c) a["omega_c"] = {{"omega", c.omega_c->omega}, {"c", scalar_json(c.omega_c->c)}};
    j["analysis"] = a;
  }
  return j;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConvergenceError*>(&e)) return kConvergence;
  if (dynamic_cast<const NumericError*>(&e)) return kNumeric;
  return kInputContract;
}

int run(const ScenarioConfig& config, const RunOptions& options) {
  fs::create_directories(options.out_dir);
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["command"] = options.command;
  doc["problem"] = config.problem;
  doc["timestamp"] = timestamp();
  doc["config"] = serialize(config);

  int code = kOk;
  std::vector<std::string> summary{"apseq " + options.command + " (" + config.problem + ")"};
  try {
    if (!command_accepts(options.command, config.problem)) {
      fail("command '" + options.command + "' does not accept problem '" + config.problem + "'");
    }
    Outcome out = options.command == "reduce-order" ? reduce(config)
                  : options.command == "analyze"    ? analyze(config, options)
                                                    : dispatch(config, options);
    if (out.x) {
      std::ostringstream csv;
      if (out.grid_csv) {
        write_grid_csv(csv, *out.x, config.window);
      } else {
        write_csv(csv, *out.x, config.window);
      }
      write_text(options.out_dir / "solution.csv", csv.str());
    }
    if (out.report) doc["report"] = to_json(*out.report);
    doc["analysis"] = out.extra;
    doc["status"] = "ok";
    summary.insert(summary.end(), out.summary.begin(), out.summary.end());
  } catch (const Error& e) {
    code = exit_code_for(e);
    doc["status"] = "error";
    doc["error"] = e.what();
    summary.push_back(std::string("error: ") + e.what());
  } catch (const json::exception& e) {
    code = kInputContract;
    doc["status"] = "error";
    doc["error"] = e.what();
    summary.push_back(std::string("error: ") + e.what());
  }
  doc["exit_code"] = code;
  summary.push_back("exit code: " + std::to_string(code));

  write_text(options.out_dir / "report.json", doc.dump(2) + "\n");
  std::string text;
  for (const auto& line : summary) text += line + "\n";
  write_text(options.out_dir / "summary.txt", text);
  return code;
}

int run_example(const ExampleOptions& options) {
  if (options.which != "heat" && options.which != "wave") fail("example must be 'heat' or 'wave'");
  ScenarioConfig c;
  c.problem = options.which;
  c.window = options.window;
  c.tol = options.tol;
  GridSpec g;
  g.n = options.n;
  g.h = options.h;
  g.dims = options.dims;

  // b(k) = 3 + sin k
  SequenceSpec b;
  b.kind = "trig_poly";
  b.frequencies = {0.0, 1.0, -1.0};
  b.values = {{Scalar{3.0, 0.0}}, {Scalar{0.0, -0.5}}, {Scalar{0.0, 0.5}}};
  g.fields["b"] = b;
  SequenceSpec m;
  m.values = {{Scalar{options.which == "heat" ? 0.1 : 0.05, 0.0}}};
  if (options.which == "heat") {
    g.fields["m"] = m;
  } else {
    g.fields["m1"] = m;
    g.fields["m2"] = m;
  }
  c.grid = g;

  // f(k, x) = phi(x) (1 + 0.5 cos k), phi the lowest Dirichlet mode
  const Index d = options.dims == 1 ? options.n : options.n * options.n;
  Row phi(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    const double t = std::numbers::pi / static_cast<double>(options.n + 1);
    const Index ix = options.dims == 1 ? i : i / options.n;
    const Index iy = options.dims == 1 ? 0 : i % options.n;
    double v = std::sin(static_cast<double>(ix + 1) * t);
    if (options.dims == 2) v *= std::sin(static_cast<double>(iy + 1) * t);
    phi[static_cast<std::size_t>(i)] = v;
  }
  Row quarter = phi;
  for (auto& z : quarter) z *= 0.25;
  SequenceSpec f;
  f.kind = "trig_poly";
  f.frequencies = {0.0, 1.0, -1.0};
  f.values = {phi, quarter, quarter};
  c.sequences["f"] = f;

  // The solution is checked at the epsilon for which f itself passes on the same ranges.
  BohrSpec bohr;
  bohr.L = 20;
  bohr.k_window = Window{-100, 100};
  bohr.tau_range = Window{-500, 500};
  bohr.epsilon = bohr_check(build_sequence(f), Seminorm::sup(), 0.0, bohr.k_window, bohr.tau_range, bohr.L,
                            options.threads)
                     .max_defect;
  c.bohr = bohr;

  RunOptions run_opts;
  run_opts.command = "solve";
  run_opts.out_dir = options.out_dir;
  run_opts.threads = options.threads;
  return run(c, run_opts);
}

}  // namespace apseq::scenario
