#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace apseq;
using apseq::testing::Rng;
using apseq::testing::sup_norm;
using apseq::testing::vec1;

namespace {

BiSequence expi(double lambda, Vector y) {
  return BiSequence::trig_poly(TrigPoly{{{lambda, std::move(y)}}});
}

}  // namespace

TEST_CASE("bohr_check on constants and periodic sequences") {
  BiSequence c = BiSequence::constant(vec1(2.0));
  APReport r = bohr_check(c, Seminorm::sup(), 1e-3, {-10, 10}, {-20, 20}, 1);
  CHECK(r.verdict);
  CHECK(r.max_defect == 0.0);
  CHECK(r.translation_numbers.size() == 41);
  CHECK(r.witness_L == 1);

  BiSequence per = BiSequence::omega_c({vec1(1.0), vec1(-2.0), vec1(0.5)}, 3, 1.0);
  APReport p = bohr_check(per, Seminorm::sup(), 0.0, {-10, 10}, {-30, 30}, 3);
  CHECK(p.verdict);
  for (long tau : p.translation_numbers) CHECK(tau % 3 == 0);
  CHECK(p.translation_numbers.size() == 21);
}

TEST_CASE("bohr_check of exp(ik) matches a brute-force scan") {
  BiSequence F = expi(1.0, vec1(1.0));
  APReport r = bohr_check(F, Seminorm::sup(), 0.1, {-50, 50}, {-300, 300}, 50, 4);
  CHECK(r.verdict);
  std::vector<long> expected;
  for (long tau = -300; tau <= 300; ++tau)
    if (std::abs(std::exp(Scalar(0, double(tau))) - 1.0) <= 0.1) expected.push_back(tau);
  CHECK(r.translation_numbers == expected);
  CHECK(std::find(expected.begin(), expected.end(), 44) != expected.end());

  APReport narrow = bohr_check(F, Seminorm::sup(), 0.1, {-50, 50}, {-300, 300}, 3);
  CHECK_FALSE(narrow.verdict);
  CHECK(narrow.max_defect > 0.1);
  CHECK_FALSE(narrow.witness_L.has_value());
}

TEST_CASE("bohr_check rejects a non almost periodic ramp") {
  BiSequence ramp = BiSequence::generator(1, [](long k) { return vec1(double(k)); });
  APReport r = bohr_check(ramp, Seminorm::sup(), 0.5, {-10, 10}, {-20, 20}, 5);
  CHECK_FALSE(r.verdict);
  CHECK(r.translation_numbers == std::vector<long>{0});
  CHECK_THROWS(bohr_check(ramp, Seminorm::sup(), 0.5, {-10, 10}, {-20, 20}, 0));
}

TEST_CASE("bohr_check reports the same result for any thread count") {
  Rng rng(2);
  BiSequence F = BiSequence::trig_poly(rng.trig_poly(2, 3));
  APReport a = bohr_check(F, Seminorm::sup(), 0.2, {-40, 40}, {-200, 200}, 30, 1);
  APReport b = bohr_check(F, Seminorm::sup(), 0.2, {-40, 40}, {-200, 200}, 30, 8);
  CHECK(a.translation_numbers == b.translation_numbers);
  CHECK(a.max_defect == b.max_defect);
  CHECK(a.verdict == b.verdict);
}

TEST_CASE("translation defect is subadditive over linear combinations") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    BiSequence F = BiSequence::trig_poly(rng.trig_poly(2, 2));
    BiSequence G = BiSequence::trig_poly(rng.trig_poly(2, 3));
    Scalar a = rng.scalar(2), b = rng.scalar(2);
    long tau = rng.integer(-100, 100);
    Window kw{-30, 30};
    double dF = translation_defect(F, Seminorm::sup(), tau, kw);
    double dG = translation_defect(G, Seminorm::sup(), tau, kw);
    double dC = translation_defect(seq_axpy(a, F, b, G), Seminorm::sup(), tau, kw);
    CHECK(dC <= (std::abs(a) * dF + std::abs(b) * dG) * (1 + 1e-12));
  }
}

TEST_CASE("pair sequence defect equals the sum of the component defects pointwise") {
  Rng rng(22);
  BiSequence F = BiSequence::trig_poly(rng.trig_poly(2, 2));
  BiSequence G = BiSequence::trig_poly(rng.trig_poly(3, 2));
  std::vector<BiSequence> parts{F, G};
  BiSequence FG = seq_stack(parts);
  Seminorm sup = Seminorm::sup();
  // the product seminorm on C^2 x C^3 (blocks of unequal size) evaluated by hand
  for (int trial = 0; trial < 50; ++trial) {
    long k = rng.integer(-20, 20), tau = rng.integer(-50, 50);
    double dF = translation_defect(F, sup, tau, {k, k});
    double dG = translation_defect(G, sup, tau, {k, k});
    Vector diff = FG(k + tau) - FG(k);
    std::vector<std::pair<Seminorm, Vector>> split{{sup, diff.head(2)}, {sup, diff.tail(3)}};
    CHECK(product_seminorm(split) == doctest::Approx(dF + dG).epsilon(1e-13));
  }
}

TEST_CASE("weyl distance") {
  BiSequence F = BiSequence::constant(vec1(1.0));
  CHECK(weyl_distance(F, F, Seminorm::sup(), 2.0, 7, {-5, 5}) == 0.0);

  const double a = 0.75;
  BiSequence P = BiSequence::zero(1);
  for (long l : {1L, 4L, 9L})
    CHECK(weyl_distance(BiSequence::constant(vec1(a)), P, Seminorm::sup(), 1.0, l, {-3, 3}) ==
          doctest::Approx(a * (l + 1) / l));

  BiSequence alt = BiSequence::generator(1, [a](long k) { return vec1(k % 2 == 0 ? 0.0 : a); });
  double oracle = 0.0;
  for (long s = -4; s <= 4; ++s) {
    double sum = 0.0;
    for (long j = s; j <= s + 2; ++j) sum += std::abs(alt(j)(0));
    oracle = std::max(oracle, sum / 2.0);
  }
  CHECK(weyl_distance(alt, P, Seminorm::sup(), 1.0, 2, {-4, 4}) == doctest::Approx(oracle));
  CHECK(oracle == doctest::Approx(a));
}

TEST_CASE("besicovitch distance") {
  BiSequence F = BiSequence::constant(vec1(1.0));
  BesicovitchReport same = besicovitch_distance(F, F, Seminorm::sup(), 1.0);
  CHECK(same.limsup_estimate == 0.0);
  CHECK(same.values_by_l.size() == 4);

  const double a = 0.5;
  BesicovitchReport c = besicovitch_distance(BiSequence::constant(vec1(a)), BiSequence::zero(1), Seminorm::sup(),
                                             1.0, {10, 100});
  CHECK(c.values_by_l[0].second == doctest::Approx(a * 21 / 10));
  CHECK(c.values_by_l[1].second == doctest::Approx(a * 201 / 100));
  CHECK(c.limsup_estimate == doctest::Approx(a * 201 / 100));

  BiSequence spike = BiSequence::generator(1, [](long k) { return vec1(k == 0 ? 1.0 : 0.0); });
  BesicovitchReport s = besicovitch_distance(spike, BiSequence::zero(1), Seminorm::sup(), 1.0);
  for (auto [l, v] : s.values_by_l) CHECK(v == doctest::Approx(1.0 / l));
  CHECK(s.limsup_estimate == doctest::Approx(1.0 / 512));
}

TEST_CASE("weyl bounds besicovitch up to the edge factor on random bounded sequences") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> vals;
    for (int i = 0; i < 201; ++i) vals.push_back(rng.vector(2));
    BiSequence F = BiSequence::table(-100, vals);
    for (long l : {5L, 20L, 64L}) {
      BesicovitchReport b = besicovitch_distance(F, BiSequence::zero(2), Seminorm::sup(), 1.0, {l});
      double w = weyl_distance(F, BiSequence::zero(2), Seminorm::sup(), 1.0, l, {-l, 1});
      CHECK(b.values_by_l[0].second <= 3.0 * w);
    }
  }
}

TEST_CASE("omega_c_check") {
  SeminormFamily fam = apseq::testing::sup_family(1);
  BiSequence half = BiSequence::omega_c({vec1(1.0)}, 1, 0.5);
  CHECK(omega_c_check(half, 1, 0.5, fam, {-20, 20}) == 0.0);
  BiSequence one = BiSequence::constant(vec1(1.0));
  CHECK(omega_c_check(one, 1, 1.0, fam, {-20, 20}) == 0.0);
  CHECK(omega_c_check(one, 1, 2.0, fam, {-20, 20}) == 1.0);
}

TEST_CASE("bohr fourier coefficients and fitting") {
  Vector y(2);
  y << Scalar(1.0, 2.0), Scalar(-0.5, 0.0);
  BiSequence F = expi(0.3, y);
  CHECK(sup_norm(bohr_fourier_coefficient(F, 0.3, 7) - y) <= 1e-15);
  CHECK(sup_norm(bohr_fourier_coefficient(F, 0.3, 200) - y) <= 1e-14);

  BiSequence alt = expi(std::numbers::pi, y);
  Vector mean = bohr_fourier_coefficient(alt, 0.0, 100);
  CHECK(sup_norm(mean - y / 201.0) <= 1e-14);

  BiSequence c = BiSequence::constant(y);
  CHECK(sup_norm(bohr_fourier_coefficient(c, 0.0, 5) - y) <= 1e-15);

  const double r2 = std::numbers::sqrt2;
  Vector y2 = vec1(0.25);
  BiSequence two = BiSequence::trig_poly(TrigPoly{{{1.0, vec1(1.0)}, {r2, y2}}});
  TrigPoly fit = fit_trig_poly(two, {1.0, r2}, 4000);
  REQUIRE(fit.terms.size() == 2);
  CHECK(std::abs(fit.terms[0].coefficient(0) - 1.0) < 1e-3);
  CHECK(std::abs(fit.terms[1].coefficient(0) - 0.25) < 1e-3);
}
