#include <catch2/catch_amalgamated.hpp>

#include "coopsyn/graph.hpp"

using namespace coopsyn;

namespace {
Theta theta1(double a) {
  Theta t;
  t.values = Vector::Constant(1, a);
  return t;
}
}  // namespace

TEST_CASE("benchmark N=4 adjacency at alpha=0") {
  auto p = benchmark_topology(4);
  Matrix u = eval_adjacency(p, theta1(0.0));
  Matrix expect(4, 4);
  expect << 0, 0, 0, 1,
            0, 0, 0, 1,
            0, 0, 0, 1,
            0, 0, 1, 0;
  CHECK(u.isApprox(expect));
}

TEST_CASE("benchmark N=4 adjacency at alpha=0.05") {
  auto p = benchmark_topology(4);
  Matrix u = eval_adjacency(p, theta1(0.05));
  CHECK(u(0, 1) == Catch::Approx(0.10));
  CHECK(u(0, 3) == Catch::Approx(0.75));
  CHECK(u(3, 2) == Catch::Approx(0.85));
  CHECK(u(2, 2) == 0.0);
}

TEST_CASE("benchmark rows sum to one for all alpha") {
  auto p = benchmark_topology(4);
  for (double a : {0.0, 0.03, 0.1, 0.17, 0.2}) {
    Matrix u = eval_adjacency(p, theta1(a));
    for (int i = 0; i < 4; ++i) CHECK(u.row(i).sum() == Catch::Approx(1.0).margin(1e-14));
  }
}

TEST_CASE("benchmark N=3 drops the first row and column") {
  auto p = benchmark_topology(3);
  const double a = 0.07;
  Matrix u = eval_adjacency(p, theta1(a));
  Matrix expect(3, 3);
  expect << 0, 3 * a, 1 - 4 * a,
            2 * a, 0, 1 - 3 * a,
            2 * a, 1 - 3 * a, 0;
  CHECK(u.isApprox(expect));
}

TEST_CASE("benchmark N=5 added agent listens to agents 1 and 4") {
  auto p = benchmark_topology(5);
  Matrix u = eval_adjacency(p, theta1(0.12));
  int nonzeros = 0;
  for (int j = 0; j < 5; ++j)
    if (u(4, j) != 0.0) ++nonzeros;
  CHECK(nonzeros == 2);
  CHECK(u(4, 0) == Catch::Approx(0.12));
  CHECK(u(4, 3) == Catch::Approx(0.88));
}

TEST_CASE("benchmark restriction to leading agents reproduces smaller topology") {
  auto p5 = benchmark_topology(5);
  auto p4 = benchmark_topology(4);
  CHECK(p5.upsilon0.topLeftCorner(4, 4).isApprox(p4.upsilon0));
  CHECK(p5.bases[0].topLeftCorner(4, 4).isApprox(p4.bases[0]));
}

TEST_CASE("benchmark families validate over the parameter box") {
  for (int n = 3; n <= 8; ++n) CHECK_NOTHROW(validate_parameterization(benchmark_topology(n)));
}

TEST_CASE("benchmark rejects N < 3") {
  CHECK_THROWS_AS(benchmark_topology(2), std::invalid_argument);
}

TEST_CASE("eval_adjacency is affine") {
  auto p = benchmark_topology(4);
  Matrix ua = eval_adjacency(p, theta1(0.05));
  Matrix ub = eval_adjacency(p, theta1(0.1));
  Matrix uab = eval_adjacency(p, theta1(0.15));
  CHECK((ua + ub - uab - p.upsilon0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("eval_adjacency rejects out-of-bounds theta") {
  auto p = benchmark_topology(4);
  CHECK_THROWS_AS(eval_adjacency(p, theta1(0.35)), std::domain_error);
  CHECK_THROWS_AS(eval_adjacency(p, theta1(-0.01)), std::domain_error);
}

TEST_CASE("spectral_norm basics") {
  CHECK(spectral_norm(Matrix::Identity(4, 4)) == Catch::Approx(1.0));
  CHECK(spectral_norm(Matrix::Zero(3, 3)) == 0.0);
  auto p = benchmark_topology(4);
  // at alpha = 0 the columns are orthogonal, col 4 has norm sqrt(3)
  CHECK(spectral_norm(eval_adjacency(p, theta1(0.0))) == Catch::Approx(std::sqrt(3.0)).margin(1e-12));
}
