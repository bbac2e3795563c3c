#include <doctest.h>

#include <cmath>

#include "test_support.hpp"

using namespace apseq;
using apseq::testing::mat1;
using apseq::testing::Rng;
using apseq::testing::sup_norm;
using apseq::testing::vec1;

namespace {

/// Block matrices written out directly from the companion rewriting.
Matrix assemble_bold_B(const std::vector<OperatorSequence>& coeffs, int p, Index d, long k) {
  Matrix B = Matrix::Zero(p * d, p * d);
  for (int j = 1; j <= p; ++j) B.block(0, (j - 1) * d, d, d) = coeffs[static_cast<std::size_t>(j)].at(k + j - 1);
  for (int i = 1; i < p; ++i) B.block(i * d, (i - 1) * d, d, d) = Matrix::Identity(d, d);
  return B;
}

Matrix assemble_bold_A(const std::vector<OperatorSequence>& coeffs, const Matrix& C, int p, Index d, long k) {
  Matrix A = Matrix::Zero(p * d, p * d);
  A.block(0, 0, d, d) = -coeffs[0].at(k);
  for (int i = 1; i < p; ++i) A.block(i * d, i * d, d, d) = C;
  return A;
}

Matrix block_diag(const Matrix& C, int p) {
  const Index d = C.rows();
  Matrix out = Matrix::Zero(p * d, p * d);
  for (int i = 0; i < p; ++i) out.block(i * d, i * d, d, d) = C;
  return out;
}

double rel_diff(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace

TEST_CASE("p = 2 scalar companion matrices") {
  std::vector<OperatorSequence> co{OperatorSequence::constant(mat1(2.0)), OperatorSequence::constant(mat1(1.0)),
                                   OperatorSequence::constant(mat1(1.0))};
  CompanionSystem sys = build_companion(2, co, mat1(1.0));
  Matrix A(2, 2), B(2, 2);
  A << -2.0, 0.0, 0.0, 1.0;
  B << 1.0, 1.0, 1.0, 0.0;
  CHECK(sys.bold_A.at(0) == A);
  CHECK(sys.bold_B.at(1) == B);
  CHECK(sys.bold_C == Matrix::Identity(2, 2));
  CHECK(sys.lift(vec1(3.0)) == Vector(Eigen::Vector2cd(3.0, 0.0)));

  std::vector<OperatorSequence> zeros(3, OperatorSequence::constant(Matrix::Zero(2, 2)));
  CompanionSystem z = build_companion(2, zeros, Matrix::Identity(2, 2));
  Matrix ZA = Matrix::Zero(4, 4);
  ZA.block(2, 2, 2, 2) = Matrix::Identity(2, 2);
  Matrix ZB = Matrix::Zero(4, 4);
  ZB.block(2, 0, 2, 2) = Matrix::Identity(2, 2);
  CHECK(z.bold_A.at(5) == ZA);
  CHECK(z.bold_B.at(5) == ZB);

  CHECK_THROWS(build_companion(1, {co[0], co[1]}, mat1(1.0)));
  CHECK_THROWS_AS(build_companion(2, {co[0], co[1]}, mat1(1.0)), InputContractError);
}

TEST_CASE("companion assembly matches an independent routine") {
  Rng rng(1);
  for (int p : {2, 3, 4}) {
    const Index d = rng.integer(1, 3);
    std::vector<OperatorSequence> co;
    for (int j = 0; j <= p; ++j) co.push_back(OperatorSequence::periodic({rng.matrix(d, d), rng.matrix(d, d)}));
    Matrix C = rng.matrix(d, d);
    CompanionSystem sys = build_companion(p, co, C);
    for (long k = -3; k <= 3; ++k) {
      CHECK(sys.bold_B.at(k) == assemble_bold_B(co, p, d, k));
      CHECK(sys.bold_A.at(k) == assemble_bold_A(co, C, p, d, k));
    }
  }
}

TEST_CASE("companion D block equals dense block multiplication") {
  Rng rng(2);
  for (int draw = 0; draw < 100; ++draw) {
    const int p = static_cast<int>(rng.integer(2, 4));
    const Index d = rng.integer(1, 3);
    std::vector<OperatorSequence> co;
    co.push_back(OperatorSequence::constant(Matrix::Identity(d, d) * 3.0 + rng.matrix(d, d)));
    for (int j = 1; j <= p; ++j) co.push_back(OperatorSequence::periodic({rng.matrix(d, d), rng.matrix(d, d)}));
    Matrix C = Matrix::Identity(d, d) * 2.0 + rng.matrix(d, d, 0.5);
    CompanionSystem sys = build_companion(p, co, C);
    Matrix A0inv_C = co[0].at(0).partialPivLu().solve(C);
    OperatorSequence a0c = OperatorSequence::constant(A0inv_C);
    const long k = rng.integer(-5, 5);
    Matrix dense = assemble_bold_B(co, p, d, k) * assemble_bold_A(co, C, p, d, k).inverse() *
                   block_diag(C, p);
    CHECK(rel_diff(companion_D_block(sys, a0c, k), dense) <= 1e-13);
  }
}

TEST_CASE("p = 2 scalar D block") {
  std::vector<OperatorSequence> co{OperatorSequence::constant(mat1(2.0)), OperatorSequence::constant(mat1(1.0)),
                                   OperatorSequence::constant(mat1(1.0))};
  CompanionSystem sys = build_companion(2, co, mat1(1.0));
  Matrix D = companion_D_block(sys, OperatorSequence::constant(mat1(0.5)), 0);
  Matrix expect(2, 2);
  expect << -0.5, 1.0, -0.5, 0.0;
  CHECK(D == expect);

  std::vector<OperatorSequence> first_zero{co[0], OperatorSequence::constant(mat1(0.0)),
                                           OperatorSequence::constant(mat1(0.0))};
  Matrix Dz = companion_D_block(build_companion(2, first_zero, mat1(1.0)), OperatorSequence::constant(mat1(0.5)), 0);
  Matrix ez = Matrix::Zero(2, 2);
  ez(1, 0) = -0.5;
  CHECK(Dz == ez);
}

TEST_CASE("second order solves") {
  SeminormFamily fam = apseq::testing::sup_family(1);
  auto con = [&](double v) { return OperatorSequence::constant(mat1(v)).certified(fam); };
  BiSequence one = BiSequence::constant(vec1(1.0));

  SecondOrderProblem p{con(-8.0), con(1.0), con(0.125), mat1(1.0), std::nullopt, one};
  SecondOrderSolution s = solve_second_order(p, fam, {-10, 10});
  for (long k = -10; k <= 10; ++k) {
    CHECK(std::abs(s.u(k)(0) + 8.0 / 55.0) <= 1e-10);
    Scalar r = 0.125 * s.u(k + 2)(0) + s.u(k + 1)(0) - 8.0 * s.u(k)(0) - 1.0;
    CHECK(std::abs(r) <= 10 * kDefaultSolveTol * 8.0);
  }
  CHECK(s.report.diagnostics.at("shift_consistency") <= 10 * kDefaultSolveTol);
  CHECK(s.report.certificate_sup.at("sup") == doctest::Approx(0.375));

  SecondOrderProblem zeroth{con(-2.0), con(0.0), con(0.0), mat1(1.0), std::nullopt, one};
  SecondOrderSolution z = solve_second_order(zeroth, fam, {-4, 4});
  for (long k = -4; k <= 4; ++k) CHECK(std::abs(z.u(k)(0) + 0.5) <= 1e-12);

  SecondOrderProblem homog = p;
  homog.f = BiSequence::zero(1);
  SecondOrderSolution h = solve_second_order(homog, fam, {-4, 4});
  for (long k = -4; k <= 4; ++k) CHECK(h.u(k).isZero());

  CHECK_THROWS_AS(solve_higher_order(3, p, fam, {-4, 4}), InputContractError);
  CHECK_NOTHROW(solve_higher_order(2, p, fam, {-4, 4}));
}

TEST_CASE("second order on random periodic systems") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = rng.integer(1, 4);
    SeminormFamily fam({Seminorm::sup(), Seminorm::p_norm(2, "l2")}, d);
    Matrix I = Matrix::Identity(d, d);
    OperatorSequence A0 = OperatorSequence::periodic({I * 8.0 + rng.matrix(d, d, 0.5), I * 9.0 + rng.matrix(d, d, 0.5)});
    OperatorSequence A1 = OperatorSequence::periodic({rng.matrix_with_sup(d, 0.5), rng.matrix_with_sup(d, 0.5)});
    OperatorSequence A2 = OperatorSequence::periodic({rng.matrix_with_sup(d, 0.2), rng.matrix_with_sup(d, 0.2)});
    BiSequence f = BiSequence::trig_poly(rng.trig_poly(d, 2));
    SecondOrderProblem p{A0, A1.certified(fam), A2.certified(fam), I, std::nullopt, f};
    SecondOrderSolution s = solve_second_order(p, fam, {-6, 6});
    double scale = 1.0;
    for (long k = 0; k < 2; ++k) scale = std::max(scale, A0.at(k).cwiseAbs().rowwise().sum().maxCoeff());
    for (long k = -6; k <= 6; ++k) {
      Vector r = A2.at(k + 2) * s.u(k + 2) + A1.at(k + 1) * s.u(k + 1) + A0.at(k) * s.u(k) - f(k);
      CHECK(sup_norm(r) <= 10 * kDefaultSolveTol * scale);
      CHECK(sup_norm(s.state(k).tail(d) - s.u(k + 1)) <= 10 * kDefaultSolveTol);
    }
  }
}

TEST_CASE("second order periodicity transfer") {
  Rng rng(4);
  SeminormFamily fam = apseq::testing::sup_family(1);
  for (long omega : {1L, 2L, 3L}) {
    std::vector<Matrix> a0, a1, a2;
    for (long i = 0; i < omega; ++i) {
      a0.push_back(mat1(rng.uniform(6.0, 8.0)));
      a1.push_back(mat1(rng.scalar(0.5)));
      a2.push_back(mat1(rng.scalar(0.3)));
    }
    std::vector<Vector> base;
    for (long i = 0; i < omega; ++i) base.push_back(rng.vector(1));
    for (Scalar c : {Scalar(1.0), Scalar(0.5), Scalar(0.0, 1.0)}) {
      SecondOrderProblem p{OperatorSequence::periodic(a0), OperatorSequence::periodic(a1).certified(fam),
                           OperatorSequence::periodic(a2).certified(fam), mat1(1.0), std::nullopt,
                           BiSequence::omega_c(base, omega, c)};
      SecondOrderSolution s = solve_second_order(p, fam, {-10, 10}, {.periodicity = OmegaCRequest{omega, c}});
      REQUIRE(s.report.periodicity_defect.has_value());
      const double scale = std::pow(1.0 / std::abs(c), 10.0 / omega + 1);
      CHECK(*s.report.periodicity_defect <= 2 * kDefaultSolveTol * scale);
    }
  }
}

TEST_CASE("system reduction B(k+1) = A(k) D(k)") {
  SeminormFamily fam = apseq::testing::sup_family(2);
  OperatorSequence A = OperatorSequence::constant(Matrix::Identity(2, 2) * 2.0);
  OperatorSequence D = OperatorSequence::constant(Matrix::Identity(2, 2) * 0.125).certified(fam);
  BmReduction r = build_B_from_D(A, D, 2, {-3, 3});
  CHECK(r.B.at(1) == Matrix(Matrix::Identity(2, 2) * 0.25));
  CHECK(r.budget == doctest::Approx(0.25));
  CHECK(r.budget_limit == doctest::Approx(0.125));
  CHECK_FALSE(r.budget_ok);

  BmReduction zero = build_B_from_D(A, OperatorSequence::constant(Matrix::Zero(2, 2)), 2, {-3, 3});
  CHECK(zero.B.at(0).isZero());
  CHECK(zero.budget_ok);

  BmReduction scalar =
      build_B_from_D(OperatorSequence::constant(mat1(3.0)), OperatorSequence::constant(mat1(0.1)), 1, {-3, 3});
  CHECK(std::abs(scalar.B.at(7)(0, 0) - 0.3) < 1e-15);
}

TEST_CASE("system solve through the selection") {
  Rng rng(5);
  const int p = 2;
  const Index n = 2 * p;
  SeminormFamily fam = apseq::testing::sup_family(n);
  OperatorSequence A = OperatorSequence::periodic({Matrix::Identity(n, n) * 3.0 + rng.matrix(n, n, 0.2),
                                                   Matrix::Identity(n, n) * 4.0 + rng.matrix(n, n, 0.2)});
  OperatorSequence D =
      OperatorSequence::periodic({rng.matrix_with_sup(n, 0.1), rng.matrix_with_sup(n, 0.05)}).certified(fam);
  BiSequence f = BiSequence::trig_poly(rng.trig_poly(n, 2));
  Solution s = solve_system_bm(A, D, p, f, fam, {-6, 6});
  BmReduction red = build_B_from_D(A, D, p, {-6, 6});
  for (long k = -6; k <= 6; ++k) {
    Matrix Bk1 = red.B.at(k + 1);
    Vector r = Bk1 * s.x(k + 1) - A.at(k) * s.x(k) - Bk1 * f(k);
    CHECK(sup_norm(r) <= 1e-9);
  }
}
