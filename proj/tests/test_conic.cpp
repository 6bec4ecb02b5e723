// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <functional>
#include <sstream>

#include "conic_instances.hpp"
#include "oracles.hpp"
#include "radcom/conic.hpp"
#include "test_util.hpp"

using namespace radcom;
using namespace radcom::conic;

TEST_CASE("hermitian embedding") {
  CHECK((embed_hermitian(CMatrix::Identity(3, 3)) - Matrix::Identity(6, 6)).norm() == 0.0);

  CMatrix y(2, 2);
  y << 0.0, Complex(0, -1), Complex(0, 1), 0.0;
  const Vector ev = oracle::jacobi_eigenvalues(embed_hermitian(y));
  CHECK(ev(0) == doctest::Approx(-1.0));
  CHECK(ev(1) == doctest::Approx(-1.0));
  CHECK(ev(2) == doctest::Approx(1.0));
  CHECK(ev(3) == doctest::Approx(1.0));

  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 4;
    const CMatrix a = testutil::random_cmatrix(gen, n, n);
    const CMatrix h = a + a.adjoint();
    const Vector herm = Eigen::SelfAdjointEigenSolver<CMatrix>(h).eigenvalues();
    const Vector emb = oracle::jacobi_eigenvalues(embed_hermitian(h));
    for (int i = 0; i < n; ++i) {
      CHECK(emb(2 * i) == doctest::Approx(herm(i)).epsilon(1e-9));
      CHECK(emb(2 * i + 1) == doctest::Approx(herm(i)).epsilon(1e-9));
    }
    CHECK((unembed_hermitian(embed_hermitian(h)) - h).norm() < 1e-12);
  }
  CMatrix bad = CMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(embed_hermitian(bad), std::invalid_argument);
}

TEST_CASE("svec round trip preserves inner products") {
  std::mt19937_64 gen(22);
  Matrix a = Matrix::Random(4, 4), b = Matrix::Random(4, 4);
  a = a + a.transpose().eval();
  b = b + b.transpose().eval();
  CHECK(svec(a).dot(svec(b)) == doctest::Approx((a * b).trace()));
  CHECK((smat(svec(a), 4) - a).norm() < 1e-14);
}

TEST_CASE("scalar bound") {
  ConicProblem p = instances::empty_problem(1);
  p.c(0) = 1.0;
  p.G = -Matrix::Ones(1, 1);
  p.h = -Vector::Ones(1);
  p.cones = {Cone::nonnegative(1)};
  const ConicSolution s = solve(p);
  REQUIRE(s.status == Status::kOptimal);
  CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("trace-constrained SDP gives the minimal eigenvector") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 10; ++trial) {
    const instances::Instance inst = instances::sdp_trace(gen, 3);
    const ConicSolution s = solve(inst.problem);
    REQUIRE(s.status == Status::kOptimal);
    CHECK(s.primal_objective == doctest::Approx(inst.optimum).epsilon(1e-5));
    const Matrix c = smat(inst.problem.c, 3);
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    const Vector v = es.eigenvectors().col(0);
    CHECK((smat(s.x, 3) - v * v.transpose()).norm() < 1e-3);
  }
}

namespace {

// Grid search with zooming over the box [-3, 3]^2.
double grid_minimum(const std::function<double(double, double)>& f,
                    const std::function<bool(double, double)>& feasible) {
  double cx = 0.0, cy = 0.0, half = 3.0, best = 1e300;
  for (int level = 0; level < 14; ++level) {
    double bx = cx, by = cy;
    const int n = 80;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        const double x = cx - half + 2 * half * i / n;
        const double y = cy - half + 2 * half * j / n;
        if (!feasible(x, y)) continue;
        const double v = f(x, y);
        if (v < best) {
          best = v;
          bx = x;
          by = y;
        }
      }
    cx = bx;
    cy = by;
    half *= 0.25;
  }
  return best;
}

}  // namespace

TEST_CASE("two-ellipsoid QCQP as SOCP against a zooming grid oracle") {
  std::mt19937_64 gen(24);
  for (int trial = 0; trial < 15; ++trial) {
    const Vector c = instances::gaussian(gen, 2);
    Matrix f1 = Matrix::Identity(2, 2) + 0.3 * Matrix::Random(2, 2);
    Matrix f2 = Matrix::Identity(2, 2) + 0.3 * Matrix::Random(2, 2);
    const Vector g1 = 0.4 * instances::gaussian(gen, 2);
    const Vector g2 = 0.4 * instances::gaussian(gen, 2);
    ConicProblem p = instances::empty_problem(2);
    p.c = c;
    p.G = Matrix::Zero(6, 2);
    p.G.block(1, 0, 2, 2) = -f1;
    p.G.block(4, 0, 2, 2) = -f2;
    p.h = Vector::Zero(6);
    p.h(0) = 1.0;
    p.h.segment(1, 2) = -g1;
    p.h(3) = 1.0;
    p.h.segment(4, 2) = -g2;
    p.cones = {Cone::second_order(3), Cone::second_order(3)};
    auto feasible = [&](double x, double y) {
      const Vector v = (Vector(2) << x, y).finished();
      return (f1 * v - g1).norm() <= 1.0 && (f2 * v - g2).norm() <= 1.0;
    };
    const double grid = grid_minimum([&](double x, double y) { return c(0) * x + c(1) * y; },
                                     feasible);
    const ConicSolution s = solve(p);
    if (grid > 1e299) {
      CHECK(s.status == Status::kInfeasible);
      continue;
    }
    REQUIRE(s.status == Status::kOptimal);
    CHECK(std::abs(s.primal_objective - grid) <= 1e-4);
  }
}

TEST_CASE("closed-form families") {
  std::mt19937_64 gen(25);
  for (int i = 0; i < 70; ++i) {
    const instances::Instance inst = instances::make(gen, i);
    CAPTURE(inst.family);
    const ConicSolution s = solve(inst.problem);
    REQUIRE(s.status == Status::kOptimal);
    CHECK(std::abs(s.primal_objective - inst.optimum) <= 1e-4);
    CHECK(s.kkt.primal <= 1e-6);
    CHECK(s.kkt.dual <= 1e-6);
    CHECK(s.kkt.gap <= 1e-6);
  }
}

TEST_CASE("infeasibility and unboundedness certificates") {
  ConicProblem p = instances::empty_problem(1);
  p.c(0) = 1.0;
  p.G.resize(2, 1);
  p.G << 1.0, -1.0;  // x <= 0 and x >= 1
  p.h.resize(2);
  p.h << 0.0, -1.0;
  p.cones = {Cone::nonnegative(2)};
  const ConicSolution inf = solve(p);
  CHECK(inf.status == Status::kInfeasible);
  CHECK(p.h.dot(inf.z) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(inf.z.minCoeff() >= -1e-9);

  ConicProblem q = instances::empty_problem(1);
  q.c(0) = 1.0;
  q.G = Matrix::Ones(1, 1);  // x <= 0 only
  q.h = Vector::Zero(1);
  q.cones = {Cone::nonnegative(1)};
  const ConicSolution unb = solve(q);
  CHECK(unb.status == Status::kUnbounded);
  CHECK(q.c.dot(unb.x) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("zero cone rows act as equalities") {
  ConicProblem p = instances::empty_problem(2);
  p.c << 1.0, 2.0;
  p.G.resize(3, 2);
  p.G << 1.0, 1.0, -1.0, 0.0, 0.0, -1.0;
  p.h.resize(3);
  p.h << 1.0, 0.0, 0.0;  // x1 + x2 = 1, x >= 0
  p.cones = {Cone::zero(1), Cone::nonnegative(2)};
  const ConicSolution s = solve(p);
  REQUIRE(s.status == Status::kOptimal);
  CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.primal_objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("solver is deterministic and validates shapes") {
  std::mt19937_64 gen(26);
  const instances::Instance inst = instances::socp_ellipsoid(gen, 4);
  const ConicSolution a = solve(inst.problem);
  const ConicSolution b = solve(inst.problem);
  CHECK((a.x - b.x).norm() == 0.0);
  ConicProblem bad = inst.problem;
  bad.h.resize(2);
  CHECK_THROWS_AS(solve(bad), std::invalid_argument);
}

TEST_CASE("problem dump is valid JSON with every field") {
  std::mt19937_64 gen(27);
  const instances::Instance inst = instances::sdp_unit_diag(gen);
  std::ostringstream out;
  dump_problem_json(inst.problem, out);
  const std::string text = out.str();
  for (const char* key : {"\"c\"", "\"A\"", "\"b\"", "\"G\"", "\"h\"", "\"cones\""})
    CHECK(text.find(key) != std::string::npos);
}
