#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "apseq/ap_analysis.hpp"
#include "apseq/discretization.hpp"
#include "apseq/first_order_solver.hpp"
#include "apseq/operator_model.hpp"

using namespace apseq;

namespace {

Matrix scaled_random(Index d, double c, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = Scalar{u(gen), u(gen)};
  const double s = std::max(m.cwiseAbs().rowwise().sum().maxCoeff(), m.cwiseAbs().colwise().sum().maxCoeff());
  return m * (c / s);
}

BiSequence forcing(Index d) {
  Vector a = Vector::Ones(d);
  Vector b = Vector::Constant(d, Scalar{0.0, 0.5});
  return BiSequence::trig_poly(TrigPoly{{{1.0, a}, {std::sqrt(2.0), b}}});
}

}  // namespace

static void BM_SolveSeries(benchmark::State& state) {
  const Index d = state.range(0);
  SeminormFamily fam({Seminorm::sup()}, d);
  OperatorSequence A =
      OperatorSequence::periodic({scaled_random(d, 0.7, 1), scaled_random(d, 0.5, 2)}).certified(fam);
  BiSequence f = forcing(d);
  for (auto _ : state) {
    Solution s = solve_series(A, f, fam, {-100, 100}, {.threads = 1});
    benchmark::DoNotOptimize(s.report.truncation_V.data());
  }
}
BENCHMARK(BM_SolveSeries)->Arg(2)->Arg(8)->Arg(32);

static void BM_OpProductApply(benchmark::State& state) {
  const Index d = 16;
  OperatorSequence A = OperatorSequence::periodic({scaled_random(d, 0.9, 3), scaled_random(d, 0.9, 4)});
  const Vector x = Vector::Ones(d);
  const long v = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(op_product_apply(A, 0, v, x));
}
BENCHMARK(BM_OpProductApply)->Arg(10)->Arg(100)->Arg(1000);

static void BM_BohrCheck(benchmark::State& state) {
  BiSequence f = forcing(1);
  const unsigned threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    APReport r = bohr_check(f, Seminorm::sup(), 0.1, {-100, 100}, {-500, 500}, 20, threads);
    benchmark::DoNotOptimize(r.max_defect);
  }
}
BENCHMARK(BM_BohrCheck)->Arg(1)->Arg(4);

static void BM_ResolventApply(benchmark::State& state) {
  GridLaplacian L = laplacian_2d(state.range(0), 0.1);
  const Vector y = Vector::Ones(L.size());
  for (auto _ : state) benchmark::DoNotOptimize(resolvent_apply(L, Scalar{2.0, 1.0}, y));
}
BENCHMARK(BM_ResolventApply)->Arg(8)->Arg(16);
