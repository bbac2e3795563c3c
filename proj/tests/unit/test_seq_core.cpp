#include <doctest.h>

#include <sstream>

#include "test_support.hpp"

using namespace apseq;
using apseq::testing::Rng;
using apseq::testing::sup_norm;
using apseq::testing::vec1;

TEST_CASE("window basics") {
  Window w{-2, 3};
  CHECK(w.valid());
  CHECK(w.size() == 6);
  CHECK(w.contains(-2));
  CHECK_FALSE(w.contains(4));
  CHECK_THROWS_AS(Window({3, -2}).require_valid("w"), InputContractError);
  CHECK(Window({3, -2}).size() == 0);
}

TEST_CASE("sup and p seminorms") {
  Vector x(2);
  x << Scalar(3, 0), Scalar(-4, 0);
  CHECK(Seminorm::sup()(x) == 4.0);
  CHECK(Seminorm::p_norm(1, "l1")(x) == doctest::Approx(7.0));
  CHECK(Seminorm::p_norm(2, "l2")(x) == doctest::Approx(5.0));
  CHECK_THROWS(Seminorm::p_norm(0.5, "bad"));
}

TEST_CASE("stencil seminorm is the sup of a zero-extended difference") {
  // (Sx)_i = x_{i+1} - x_i with x_3 = 0
  Seminorm diff = Seminorm::stencil({{0, -1.0}, {1, 1.0}}, "d1");
  Vector x(3);
  x << 1.0, 2.0, 3.0;
  CHECK(diff(x) == doctest::Approx(3.0));
  Matrix S = diff.stencil_matrix(3);
  CHECK(S(0, 0) == Scalar(-1.0));
  CHECK(S(0, 1) == Scalar(1.0));
  CHECK(S(2, 2) == Scalar(-1.0));
  CHECK(sup_norm(S * x) == doctest::Approx(diff(x)));
}

TEST_CASE("product seminorm sums the components") {
  Seminorm prod = Seminorm::product(Seminorm::sup(), 2);
  Vector x(4);
  x << 1.0, -3.0, 2.0, 0.5;
  CHECK(prod(x) == doctest::Approx(5.0));
  CHECK(prod.base().kind() == SeminormKind::sup);

  Vector a(2);
  a << 3.0, -4.0;
  std::vector<std::pair<Seminorm, Vector>> one{{Seminorm::sup(), a}};
  CHECK(product_seminorm(one) == 4.0);
  std::vector<std::pair<Seminorm, Vector>> two{{Seminorm::sup(), vec1(1.0)}, {Seminorm::sup(), vec1(2.0)}};
  CHECK(product_seminorm(two) == 3.0);
  std::vector<std::pair<Seminorm, Vector>> zeros{{Seminorm::sup(), Vector::Zero(3)}};
  CHECK(product_seminorm(zeros) == 0.0);
}

TEST_CASE("seminorm family contract") {
  CHECK_THROWS_AS(SeminormFamily({}, 2), InputContractError);
  CHECK_THROWS_AS(SeminormFamily({Seminorm::sup("a"), Seminorm::p_norm(2, "a")}, 2), InputContractError);
  CHECK_THROWS_AS(SeminormFamily({Seminorm::stencil({{0, 0.0}}, "null")}, 2), InputContractError);
  SeminormFamily fam({Seminorm::sup(), Seminorm::p_norm(2, "l2")}, 3);
  CHECK(fam.size() == 2);
  CHECK(fam.at("l2").p() == 2.0);
  CHECK_THROWS(fam.at("missing"));
  SeminormFamily lifted = fam.lifted(2);
  CHECK(lifted.dim() == 6);
  CHECK(lifted.at("sup").kind() == SeminormKind::product);
}

TEST_CASE("seminorm axioms on random samples") {
  Rng rng(11);
  std::vector<Seminorm> kinds{Seminorm::sup(), Seminorm::p_norm(1, "l1"), Seminorm::p_norm(2, "l2"),
                              Seminorm::p_norm(3.5, "l35"), Seminorm::stencil({{0, -1.0}, {1, 1.0}}, "d1"),
                              Seminorm::stencil({{-1, 1.0}, {0, -2.0}, {1, 1.0}}, "d2"),
                              Seminorm::product(Seminorm::p_norm(2, "l2"), 2, "pl2")};
  for (const auto& kappa : kinds) {
    for (int trial = 0; trial < 1000; ++trial) {
      Vector x = rng.vector(6, 3.0);
      Vector y = rng.vector(6, 3.0);
      Scalar a = rng.scalar(2.0);
      const double kx = kappa(x);
      CHECK(kx >= 0.0);
      CHECK(kappa(a * x) == doctest::Approx(std::abs(a) * kx).epsilon(1e-12));
      CHECK(kappa(x + y) <= (kx + kappa(y)) * (1 + 1e-12));
    }
  }
}

TEST_CASE("table lookup, extension rules and range errors") {
  BiSequence t = BiSequence::table(0, {vec1(1.0), vec1(2.0)});
  CHECK(t(1)(0) == Scalar(2.0));
  CHECK_THROWS_AS(t(2), RangeError);
  CHECK_THROWS_AS(t(-1), RangeError);
  CHECK(t.stored_window() == Window{0, 1});

  BiSequence z = BiSequence::table(0, {vec1(1.0), vec1(2.0)}, Extension::zero);
  CHECK(z(5)(0) == Scalar(0.0));
  BiSequence p = BiSequence::table(0, {vec1(1.0), vec1(2.0)}, Extension::periodic);
  CHECK(p(5)(0) == Scalar(2.0));
  CHECK(p(-1)(0) == Scalar(2.0));
  CHECK(p(-2)(0) == Scalar(1.0));
}

TEST_CASE("trig poly and omega_c constructors") {
  TrigPoly poly;
  poly.terms.push_back({0.0, vec1(3.0)});
  CHECK(BiSequence::trig_poly(poly)(17)(0) == Scalar(3.0));

  BiSequence half = BiSequence::omega_c({vec1(1.0)}, 1, 0.5);
  CHECK(half(3)(0) == Scalar(0.125));
  CHECK(half(-2)(0) == Scalar(4.0));
  CHECK(ipow(Scalar(2.0), -3) == Scalar(0.125));
  CHECK(ipow(Scalar(0.0, 1.0), 4) == Scalar(1.0));
}

TEST_CASE("omega_c extension satisfies its defining identity") {
  Rng rng(7);
  for (long omega : {1L, 2L, 3L, 5L}) {
    for (Scalar c : {Scalar(1.0), Scalar(0.5), Scalar(2.0), Scalar(0.0, 1.0), Scalar(-1.0), rng.scalar(1.5)}) {
      std::vector<Vector> base;
      for (long r = 0; r < omega; ++r) base.push_back(rng.vector(3));
      BiSequence F = BiSequence::omega_c(base, omega, c);
      for (long k = -50; k <= 50; ++k) {
        Vector lhs = F(k + omega);
        Vector rhs = c * F(k);
        CHECK(sup_norm(lhs - rhs) <= 1e-13 * std::max(1.0, sup_norm(rhs)));
      }
    }
  }
}

TEST_CASE("axpy, shift and stack") {
  BiSequence one = BiSequence::constant(vec1(1.0));
  CHECK(seq_axpy(2.0, one, 3.0, one)(4)(0) == Scalar(5.0));
  CHECK(seq_axpy(1.0, one, -1.0, one)(-9)(0) == Scalar(0.0));
  CHECK_THROWS_AS(seq_axpy(1.0, one, 1.0, BiSequence::zero(2)), ShapeError);

  Rng rng(3);
  std::vector<Vector> a, b;
  for (int i = 0; i < 20; ++i) {
    a.push_back(rng.vector(2));
    b.push_back(rng.vector(2));
  }
  BiSequence A = BiSequence::table(-5, a), B = BiSequence::table(-5, b);
  Scalar al = rng.scalar(), be = rng.scalar();
  BiSequence comb = seq_axpy(al, A, be, B);
  for (long k = -5; k < 15; ++k) {
    Vector expect = al * A(k) + be * B(k);
    CHECK(comb(k) == expect);
  }

  BiSequence half = BiSequence::omega_c({vec1(1.0)}, 1, 0.5);
  for (long k = -5; k <= 5; ++k) CHECK(seq_shift(half, 1)(k)(0) == 0.5 * half(k)(0));
  CHECK(seq_shift(A, 0)(3) == A(3));

  const double lambda = 0.7;
  const Vector y = rng.vector(2);
  TrigPoly tp{{{lambda, y}}};
  BiSequence shifted = seq_shift(BiSequence::trig_poly(tp), 4);
  TrigPoly moved{{{lambda, Vector(y * std::exp(Scalar(0, lambda * 4)))}}};
  for (long k = -5; k < 5; ++k)
    CHECK(sup_norm(shifted(k) - BiSequence::trig_poly(moved)(k)) <= 1e-14);

  std::vector<BiSequence> parts{one, BiSequence::zero(2)};
  BiSequence st = seq_stack(parts);
  CHECK(st.dim() == 3);
  CHECK(st(0)(0) == Scalar(1.0));
  CHECK(st(0)(2) == Scalar(0.0));
}

TEST_CASE("csv round trip is exact") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = rng.integer(1, 4);
    const long lo = rng.integer(-30, 30);
    std::vector<Vector> vals;
    for (int i = 0; i < 15; ++i) {
      Vector v = rng.vector(d, std::pow(10.0, rng.uniform(-200, 200)));
      vals.push_back(v);
    }
    BiSequence F = BiSequence::table(lo, vals);
    std::stringstream ss;
    write_csv(ss, F, {lo, lo + 14});
    BiSequence G = read_csv(ss);
    CHECK(G.stored_window() == Window{lo, lo + 14});
    for (long k = lo; k <= lo + 14; ++k) CHECK(G(k) == F(k));
  }
  CHECK(format_double(0.1) == "1.0000000000000001e-01");
}
