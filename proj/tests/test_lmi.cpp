#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "coopsyn/lmi.hpp"

using namespace coopsyn;

TEST_CASE("declare_variable scalar accounting") {
  VariableRegistry reg;
  reg.declare("X", VarStructure::Symmetric, 8);
  CHECK(reg.count_unknowns() == 36);
  reg.declare("Y", VarStructure::SkewSymmetric, 4);
  CHECK(reg.count_unknowns() == 36 + 6);
  reg.declare("a", VarStructure::Scalar, 1);
  CHECK(reg.count_unknowns() == 43);
  reg.declare("mu", VarStructure::Scalar, 1, 1, /*counted=*/false);
  CHECK(reg.count_unknowns() == 43);
  reg.declare("F", VarStructure::Full, 2, 3);
  CHECK(reg.count_unknowns() == 49);
  CHECK_THROWS_AS(reg.declare("bad", VarStructure::Symmetric, 0), std::invalid_argument);
}

TEST_CASE("empty registry counts zero") {
  VariableRegistry reg;
  CHECK(reg.count_unknowns() == 0);
}

TEST_CASE("basis and value round trip per structure") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n01;
  VariableRegistry reg;
  auto hs = reg.declare("S", VarStructure::Symmetric, 3);
  auto hk = reg.declare("K", VarStructure::SkewSymmetric, 3);
  auto hf = reg.declare("F", VarStructure::Full, 2, 3);

  Matrix s(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) s(i, j) = s(j, i) = n01(rng);
  Matrix k = Matrix::Zero(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      k(i, j) = n01(rng);
      k(j, i) = -k(i, j);
    }
  Matrix f(2, 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) f(i, j) = n01(rng);

  CHECK(reg.value_from_scalars(hs, reg.scalars_from_value(hs, s)).isApprox(s));
  CHECK(reg.value_from_scalars(hk, reg.scalars_from_value(hk, k)).isApprox(k));
  CHECK(reg.value_from_scalars(hf, reg.scalars_from_value(hf, f)).isApprox(f));
}

TEST_CASE("evaluate with no terms returns the constant") {
  VariableRegistry reg;
  auto e = AffineMatrixExpression::zero(2);
  e.constant << 1, 2, 2, -1;
  CHECK(evaluate(e, {}).isApprox(e.constant));
}

TEST_CASE("single scalar term with L = R = I doubles by symmetrization") {
  VariableRegistry reg;
  auto v = reg.declare("v", VarStructure::Scalar, 1);
  // embed the 1x1 variable on each diagonal slot: sum_k e_k v e_k^T + transpose = 2 v I
  auto e = AffineMatrixExpression::zero(2);
  e.constant = (Matrix(2, 2) << 4, 0, 0, 4).finished();
  for (int k = 0; k < 2; ++k) {
    Matrix l = Matrix::Zero(2, 1), r = Matrix::Zero(1, 2);
    l(k, 0) = 1.0;
    r(0, k) = 1.0;
    e.add_term(v, l, r);
  }
  Assignment a;
  a[v] = Matrix::Constant(1, 1, 2.0);
  CHECK(evaluate(e, a).isApprox(e.constant + 2.0 * 2.0 * Matrix::Identity(2, 2)));
}

TEST_CASE("evaluate output is symmetric for random assignments") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  VariableRegistry reg;
  auto hs = reg.declare("S", VarStructure::Symmetric, 3);
  auto hk = reg.declare("K", VarStructure::SkewSymmetric, 3);
  auto e = AffineMatrixExpression::zero(4);
  auto rnd = [&](int r, int c) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = n01(rng);
    return m;
  };
  Matrix c0 = rnd(4, 4);
  e.constant = c0 + c0.transpose();
  e.add_term(hs, rnd(4, 3), rnd(3, 4));
  e.add_term(hk, rnd(4, 3), rnd(3, 4));
  for (int trial = 0; trial < 20; ++trial) {
    Assignment a;
    Matrix s = rnd(3, 3);
    a[hs] = 0.5 * (s + s.transpose());
    Matrix k = rnd(3, 3);
    a[hk] = 0.5 * (k - k.transpose());
    Matrix m = evaluate(e, a);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("evaluate rejects missing handles") {
  VariableRegistry reg;
  auto hv = reg.declare("v", VarStructure::Scalar, 1);
  auto e = AffineMatrixExpression::zero(1);
  e.add_term(hv, Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  CHECK_THROWS_AS(evaluate(e, {}), std::invalid_argument);
}

TEST_CASE("to_standard_form on x >= 1 yields one 1x1 block") {
  VariableRegistry reg;
  auto hx = reg.declare("x", VarStructure::Scalar, 1);
  MISystem sys;
  Constraint c;
  c.name = "x_ge_1";
  c.expr = AffineMatrixExpression::zero(1);
  c.expr.constant(0, 0) = -1.0;
  c.expr.add_term(hx, Matrix::Constant(1, 1, 0.5), Matrix::Identity(1, 1));
  c.sense = Sense::PositiveDefinite;
  sys.constraints.push_back(c);
  sys.objective.push_back({hx, 0, 1.0});
  auto p = to_standard_form(sys, reg);
  REQUIRE(p.blocks.size() == 1);
  CHECK(p.blocks[0].dim == 1);
  CHECK(p.var_count == 1);
}

TEST_CASE("standard form round trip matches direct evaluation") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n01;
  auto rnd = [&](int r, int c) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = n01(rng);
    return m;
  };
  for (int trial = 0; trial < 10; ++trial) {
    VariableRegistry reg;
    auto hs = reg.declare("S", VarStructure::Symmetric, 3);
    auto hv = reg.declare("v", VarStructure::Scalar, 1);
    MISystem sys;
    for (int cidx = 0; cidx < 2; ++cidx) {
      Constraint c;
      c.name = "c" + std::to_string(cidx);
      c.expr = AffineMatrixExpression::zero(4);
      Matrix c0 = rnd(4, 4);
      c.expr.constant = c0 + c0.transpose();
      c.expr.add_term(hs, rnd(4, 3), rnd(3, 4));
      c.expr.add_term(hv, rnd(4, 1), rnd(1, 4));
      c.sense = (cidx == 0) ? Sense::NegativeDefinite : Sense::PositiveDefinite;
      c.margin = 1e-7;
      sys.constraints.push_back(c);
    }
    auto p = to_standard_form(sys, reg);
    Assignment a;
    Matrix s = rnd(3, 3);
    a[hs] = 0.5 * (s + s.transpose());
    a[hv] = Matrix::Constant(1, 1, n01(rng));
    Vector x = solver_vector_from_assignment(p, reg, a);
    for (size_t j = 0; j < sys.constraints.size(); ++j) {
      Matrix direct = evaluate(sys.constraints[j].expr, a);
      const double sgn = sys.constraints[j].sense == Sense::NegativeDefinite ? -1.0 : 1.0;
      Matrix via_block = evaluate_block(p.blocks[j], x) +
                         sys.constraints[j].margin * Matrix::Identity(4, 4);
      CHECK((sgn * direct - via_block).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("sparsity screening drops untouched scalars and vacuous slots") {
  VariableRegistry reg;
  auto hs = reg.declare("S", VarStructure::Symmetric, 3);  // only (0,0) will be used
  auto hu = reg.declare("unused", VarStructure::Symmetric, 2);
  MISystem sys;
  Constraint c;
  c.expr = AffineMatrixExpression::zero(3);
  c.expr.constant(1, 1) = -1.0;  // slot 1: constant diagonal, trivially satisfied
  // slot 2: completely empty -> vacuous padding
  Matrix l = Matrix::Zero(3, 3);
  l(0, 0) = 0.5;
  Matrix r = Matrix::Zero(3, 3);
  r(0, 0) = 1.0;
  c.expr.add_term(hs, l, r);  // touches only S(0,0) at slot (0,0)
  c.sense = Sense::NegativeDefinite;
  sys.constraints.push_back(c);
  auto p = to_standard_form(sys, reg);
  CHECK(p.blocks[0].dim == 1);        // slots 1 and 2 screened
  CHECK(p.var_count == 1);            // only S(0,0) survives
  CHECK(reg.count_unknowns() == 1);   // screened count
  (void)hu;
}
