#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "scenario.hpp"
#include "test_support.hpp"

using namespace apseq;
using namespace apseq::scenario;
using apseq::testing::Rng;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "apseq_scenario_tests" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json report_without_timestamp(const fs::path& dir) {
  json j = json::parse(slurp(dir / "report.json"));
  j.erase("timestamp");
  return j;
}

json minimal_first_order() {
  return json::parse(R"({
    "schema_version": 1,
    "problem": "first_order",
    "window": [-5, 5],
    "operators": {"A": {"kind": "constant", "matrix": 0.5}},
    "sequences": {"f": {"kind": "constant", "value": 1}}
  })");
}

Row random_row(Rng& rng, std::size_t d) {
  Row r;
  for (std::size_t i = 0; i < d; ++i) r.push_back(rng.integer(0, 1) ? Scalar(rng.uniform(-1, 1)) : rng.scalar());
  return r;
}

Rows random_rows(Rng& rng, std::size_t r, std::size_t c) {
  Rows out;
  for (std::size_t i = 0; i < r; ++i) out.push_back(random_row(rng, c));
  return out;
}

ScenarioConfig random_config(Rng& rng) {
  static const std::vector<std::string> problems{"first_order", "inclusion", "degenerate_vb", "degenerate_vb1",
                                                 "second_order", "system_bm", "heat", "wave"};
  ScenarioConfig c;
  c.problem = problems[static_cast<std::size_t>(rng.integer(0, 7))];
  const long lo = rng.integer(-50, 0);
  c.window = {lo, lo + rng.integer(0, 60)};
  c.tol = std::pow(10.0, -rng.integer(6, 12));
  c.v_max = rng.integer(100, 20000);
  c.order = static_cast<int>(rng.integer(1, 3));
  const std::size_t d = static_cast<std::size_t>(rng.integer(1, 3));
  if (rng.integer(0, 1)) {
    SeminormSpec p;
    p.kind = "p_norm";
    p.label = "l2";
    p.p = 2.0;
    SeminormSpec s;
    s.kind = "stencil";
    s.label = "d1";
    s.offsets = {0, 1};
    s.weights = {Scalar(-1.0), Scalar(1.0, 0.5)};
    c.seminorms.push_back(p);
    c.seminorms.push_back(s);
  }
  OperatorSpec con;
  con.matrices = {random_rows(rng, d, d)};
  c.operators["A"] = con;
  OperatorSpec per;
  per.kind = "periodic";
  per.matrices = {random_rows(rng, d, d), random_rows(rng, d, d)};
  per.sup_bounds = {{"sup", rng.uniform(0, 1)}};
  c.operators["D"] = per;
  OperatorSpec trig;
  trig.kind = "trig";
  trig.matrices = {random_rows(rng, d, d)};
  trig.frequencies = {rng.uniform(-3, 3)};
  c.operators["B"] = trig;
  OperatorSpec gen;
  gen.kind = "generator";
  gen.matrices = {random_rows(rng, d, d), random_rows(rng, d, d)};
  gen.frequencies = {rng.uniform(0, 2)};
  gen.phases = {rng.uniform(0, 1)};
  gen.period = rng.integer(1, 9);
  c.operators["A1"] = gen;
  if (rng.integer(0, 1)) c.C = random_rows(rng, d, d);

  SequenceSpec f;
  f.values = {random_row(rng, d)};
  c.sequences["f"] = f;
  SequenceSpec t;
  t.kind = "table";
  t.values = random_rows(rng, 4, d);
  t.k_min = rng.integer(-10, 10);
  t.extension = rng.integer(0, 1) ? "periodic" : "zero";
  c.sequences["g"] = t;
  SequenceSpec oc;
  oc.kind = "omega_c";
  oc.omega = 2;
  oc.values = random_rows(rng, 2, d);
  oc.c = rng.scalar();
  c.sequences["h"] = oc;
  SequenceSpec tp;
  tp.kind = "trig_poly";
  tp.values = random_rows(rng, 2, d);
  tp.frequencies = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  c.sequences["p"] = tp;
  SequenceSpec z;
  z.kind = "zero";
  z.dim = static_cast<long>(d);
  c.sequences["z"] = z;

  if (rng.integer(0, 1)) {
    GridSpec g;
    g.n = rng.integer(1, 9);
    g.h = rng.uniform(0.1, 2);
    g.dims = static_cast<int>(rng.integer(1, 2));
    g.fields["m"] = f;
    if (rng.integer(0, 1)) g.period = 3;
    c.grid = g;
  }
  if (rng.integer(0, 1)) c.bohr = BohrSpec{"sup", rng.uniform(0, 1), rng.integer(1, 30), {-10, 10}, {-40, 40}};
  if (rng.integer(0, 1)) c.besicovitch = BesicovitchSpec{"sup", 1.0, {8, 16}, {1.0}, 64};
  if (rng.integer(0, 1)) c.omega_c = OmegaCSpec{rng.integer(1, 4), rng.scalar()};
  return c;
}

}  // namespace

TEST_CASE("parse fills defaults") {
  ScenarioConfig c = parse(minimal_first_order());
  CHECK(c.problem == "first_order");
  CHECK(c.window == Window{-5, 5});
  CHECK(c.tol == kDefaultSolveTol);
  CHECK(c.seminorms.size() == 1);
  CHECK(c.seminorms[0].kind == "sup");
  CHECK(c.operators.at("A").matrices[0][0][0] == Scalar(0.5));
}

TEST_CASE("parse rejects malformed documents") {
  json doc = minimal_first_order();
  doc["window"] = {5, -5};
  CHECK_THROWS_AS(parse(doc), InputContractError);
  doc = minimal_first_order();
  doc["bogus"] = 1;
  CHECK_THROWS_AS(parse(doc), InputContractError);
  doc = minimal_first_order();
  doc["schema_version"] = 2;
  CHECK_THROWS_AS(parse(doc), InputContractError);
  doc = minimal_first_order();
  doc.erase("schema_version");
  CHECK_THROWS_AS(parse(doc), InputContractError);
  doc = minimal_first_order();
  doc["problem"] = "fourth_order";
  CHECK_THROWS_AS(parse(doc), InputContractError);
  doc = minimal_first_order();
  doc["operators"]["A"]["matrix"] = {{1, 2}, {3}};
  CHECK_THROWS_AS(parse(doc), InputContractError);
  doc = minimal_first_order();
  doc["sequences"]["f"] = {{"kind", "trig_poly"}, {"values", {{1}}}, {"frequencies", {1.0, 2.0}}};
  CHECK_THROWS_AS(parse(doc), InputContractError);
}

TEST_CASE("parse, serialize, parse is the identity") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    ScenarioConfig c = random_config(rng);
    json once = serialize(c);
    ScenarioConfig back = parse(once);
    CHECK(back == c);
    CHECK(serialize(back) == once);
    // through text as well
    CHECK(parse(json::parse(once.dump())) == c);
  }
}

TEST_CASE("run: minimal first order config") {
  fs::path dir = scratch("first_order");
  int code = run(parse(minimal_first_order()), {.command = "solve", .out_dir = dir});
  CHECK(code == kOk);
  std::istringstream csv(slurp(dir / "solution.csv"));
  BiSequence x = read_csv(csv);
  for (long k = -5; k <= 5; ++k) CHECK(std::abs(x(k)(0) - 2.0) <= 1e-10);
  json rep = json::parse(slurp(dir / "report.json"));
  CHECK(rep["status"] == "ok");
  CHECK(rep["exit_code"] == 0);
  CHECK(rep.contains("timestamp"));
  CHECK(rep["report"]["uniqueness"] == "certified");
  CHECK(fs::exists(dir / "summary.txt"));
}

TEST_CASE("run: exit codes") {
  json div = minimal_first_order();
  div["operators"]["A"]["matrix"] = 1;
  div["v_max"] = 300;
  CHECK(run(parse(div), {.command = "solve", .out_dir = scratch("div")}) == kConvergence);

  json sing = json::parse(R"({
    "schema_version": 1, "problem": "inclusion", "window": [-3, 3],
    "operators": {"A": {"kind": "constant", "matrix": [[1, 2], [2, 4]]}},
    "sequences": {"f": {"kind": "constant", "value": [1, 1]}}
  })");
  CHECK(run(parse(sing), {.command = "solve-inclusion", .out_dir = scratch("sing")}) == kNumeric);

  CHECK(run(parse(minimal_first_order()), {.command = "solve-p2", .out_dir = scratch("wrong_cmd")}) == kInputContract);

  json unbounded = minimal_first_order();
  unbounded["sequences"]["f"] = {{"kind", "omega_c"}, {"values", {{1}}}, {"omega", 1}, {"c", 0.5}};
  fs::path dir = scratch("unbounded");
  CHECK(run(parse(unbounded), {.command = "solve", .out_dir = dir}) == kInputContract);
  CHECK(json::parse(slurp(dir / "report.json"))["status"] == "error");
}

TEST_CASE("run: every problem kind") {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"solve-inclusion", R"({"schema_version": 1, "problem": "inclusion", "window": [-4, 4],
        "operators": {"A": {"kind": "periodic", "matrices": [2, [[-3]]]}},
        "sequences": {"f": {"kind": "trig_poly", "values": [[1], [[0, 1]]], "frequencies": [0.5, 1.5]}}})"},
      {"solve-degenerate", R"({"schema_version": 1, "problem": "degenerate_vb", "window": [-4, 4],
        "operators": {"B": {"kind": "constant", "matrix": 0.5}, "A": {"kind": "constant", "matrix": 2}},
        "sequences": {"f": {"kind": "constant", "value": 1}}})"},
      {"solve-degenerate", R"({"schema_version": 1, "problem": "degenerate_vb1", "window": [-4, 4],
        "operators": {"B": {"kind": "constant", "matrix": 0.5}, "A": {"kind": "constant", "matrix": 2}},
        "sequences": {"g": {"kind": "constant", "value": 1}, "f": {"kind": "constant", "value": 2}}})"},
      {"solve-p2", R"({"schema_version": 1, "problem": "second_order", "window": [-4, 4],
        "operators": {"A0": {"kind": "constant", "matrix": -8}, "A1": {"kind": "constant", "matrix": 1},
                      "A2": {"kind": "constant", "matrix": 0.125}},
        "sequences": {"f": {"kind": "constant", "value": 1}}})"},
      {"solve-degenerate", R"({"schema_version": 1, "problem": "system_bm", "window": [-4, 4], "order": 2,
        "operators": {"A": {"kind": "constant", "matrix": [[2, 0], [0, 2]]},
                      "D": {"kind": "constant", "matrix": [[0.125, 0], [0, 0.125]]}},
        "sequences": {"f": {"kind": "constant", "value": [1, -1]}}})"},
      {"solve-degenerate", R"({"schema_version": 1, "problem": "heat", "window": [-4, 4],
        "grid": {"n": 4, "fields": {"m": {"kind": "constant", "value": 0.1},
                                    "b": {"kind": "constant", "value": 3}}},
        "sequences": {"f": {"kind": "constant", "value": 1}}})"},
      {"solve-p2", R"({"schema_version": 1, "problem": "wave", "window": [-4, 4],
        "grid": {"n": 3, "dims": 2, "fields": {"m1": {"kind": "constant", "value": 0.05},
                 "m2": {"kind": "constant", "value": 0.05}, "b": {"kind": "constant", "value": 3}}},
        "sequences": {"f": {"kind": "constant", "value": 1}}})"},
  };
  int i = 0;
  for (const auto& [cmd, text] : cases) {
    CAPTURE(text);
    fs::path dir = scratch("kind" + std::to_string(i++));
    CHECK(run(parse(json::parse(text)), {.command = cmd, .out_dir = dir}) == kOk);
    json rep = json::parse(slurp(dir / "report.json"));
    CHECK(rep["report"]["max_residual"]["sup"].get<double>() <= 1e-9);
  }
}

TEST_CASE("reduce-order and analyze") {
  json p2 = json::parse(R"({"schema_version": 1, "problem": "second_order", "window": [0, 2],
        "operators": {"A0": {"kind": "constant", "matrix": 2}, "A1": {"kind": "constant", "matrix": 1},
                      "A2": {"kind": "constant", "matrix": 1}},
        "sequences": {"f": {"kind": "constant", "value": 1}}})");
  fs::path dir = scratch("reduce");
  CHECK(run(parse(p2), {.command = "reduce-order", .out_dir = dir}) == kOk);
  json rep = json::parse(slurp(dir / "report.json"));
  CHECK(rep["analysis"]["companion"].size() == 3);

  json an = minimal_first_order();
  an["sequences"]["f"] = {{"kind", "trig_poly"}, {"values", {{1}}}, {"frequencies", {1.0}}};
  an["analysis"] = json::parse(R"({"bohr": {"epsilon": 0.1, "L": 50, "k_window": [-20, 20], "tau_range": [-300, 300]},
                                   "omega_c": {"omega": 1, "c": 1}})");
  fs::path adir = scratch("analyze");
  CHECK(run(parse(an), {.command = "analyze", .out_dir = adir}) == kOk);
  json arep = json::parse(slurp(adir / "report.json"));
  CHECK(arep["analysis"]["bohr"]["verdict"] == true);

  // analyze a CSV produced by a previous run
  fs::path src = scratch("analyze_src");
  CHECK(run(parse(minimal_first_order()), {.command = "solve", .out_dir = src}) == kOk);
  json oc = minimal_first_order();
  oc["analysis"] = json::parse(R"({"omega_c": {"omega": 1, "c": 1}})");
  fs::path cdir = scratch("analyze_csv");
  CHECK(run(parse(oc), {.command = "analyze", .out_dir = cdir, .input_csv = src / "solution.csv"}) == kOk);
  CHECK(json::parse(slurp(cdir / "report.json"))["analysis"]["omega_c_defect"].get<double>() <= 1e-10);
}

TEST_CASE("runs are byte-identical across repeats and thread counts") {
  json doc = json::parse(R"({"schema_version": 1, "problem": "first_order", "window": [-30, 30],
      "seminorms": [{"kind": "sup"}, {"kind": "p_norm", "label": "l2", "p": 2}],
      "operators": {"A": {"kind": "trig", "matrices": [[[0.2, 0.1], [0, 0.3]], [[0.1, 0], [0.05, 0.1]]],
                          "frequencies": [0, 1.4142135623730951]}},
      "sequences": {"f": {"kind": "trig_poly", "values": [[1, 0], [0, [0, 1]]], "frequencies": [1, 2.5]}},
      "analysis": {"bohr": {"epsilon": 0.5, "L": 40, "k_window": [-20, 20], "tau_range": [-100, 100]}}})");
  ScenarioConfig c = parse(doc);
  fs::path a = scratch("det1"), b = scratch("det2"), e = scratch("det8");
  CHECK(run(c, {.command = "solve", .out_dir = a, .threads = 1}) == kOk);
  CHECK(run(c, {.command = "solve", .out_dir = b, .threads = 1}) == kOk);
  CHECK(run(c, {.command = "solve", .out_dir = e, .threads = 8}) == kOk);
  CHECK(slurp(a / "solution.csv") == slurp(b / "solution.csv"));
  CHECK(slurp(a / "solution.csv") == slurp(e / "solution.csv"));
  CHECK(report_without_timestamp(a) == report_without_timestamp(b));
  CHECK(report_without_timestamp(a) == report_without_timestamp(e));
}

TEST_CASE("example scenarios") {
  fs::path dir = scratch("heat");
  CHECK(run_example({.which = "heat", .out_dir = dir}) == kOk);
  json rep = json::parse(slurp(dir / "report.json"));
  CHECK(rep["analysis"]["bohr"]["verdict"] == true);
  std::string csv = slurp(dir / "solution.csv");
  CHECK(csv.rfind("k,index,re,im\n", 0) == 0);
  CHECK_THROWS_AS(run_example({.which = "nope", .out_dir = dir}), InputContractError);
}
