#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fracddg/frac_ops.hpp"

namespace fracddg {
namespace {

double power_rule_cell(double mu, double lo, double hi, double x) {
  // I^mu of the indicator of [lo,hi] at x >= hi
  return (std::pow(x - lo, mu) - std::pow(std::max(x - hi, 0.0), mu)) / std::tgamma(mu + 1.0);
}

TEST(FracIntegral, PowerRuleOnUnitCell) {
  const ShiftedPoly one{0.0, {1.0}};
  EXPECT_NEAR(frac_integral_element(0.5, one, 0.0, 1.0, 1.0), 1.1283791671, 1e-10);
  EXPECT_NEAR(frac_integral_element(0.5, one, 0.0, 1.0, 1.0), 1.0 / std::tgamma(1.5), 1e-12);
  for (double mu : {0.1, 0.37, 0.8}) EXPECT_EQ(frac_integral_element(mu, one, 0.0, 1.0, 0.0), 0.0);
  EXPECT_EQ(frac_integral_element(0.5, one, 0.0, 1.0, -0.5), 0.0);
}

TEST(FracIntegral, PowerRuleNearAndFarField) {
  const ShiftedPoly one{0.0, {1.0}};
  for (double mu : {0.05, 0.3, 0.5, 0.9}) {
    for (double x : {0.25, 1.0, 1.4, 2.5, 9.0}) {
      EXPECT_NEAR(frac_integral_element(mu, one, 0.0, 1.0, x), power_rule_cell(mu, 0.0, std::min(1.0, x), x), 1e-11)
          << mu << " " << x;
    }
  }
}

TEST(FracIntegral, RightVariantMirrors) {
  const ShiftedPoly one{0.0, {1.0}};
  for (double x : {-3.0, -0.5, 0.0, 0.4}) {
    const double lo = std::max(0.0, x);
    const double expect = (std::pow(1.0 - x, 0.5) - std::pow(lo - x, 0.5)) / std::tgamma(1.5);
    EXPECT_NEAR(frac_integral_element(0.5, one, 0.0, 1.0, x, Side::kRight), expect, 1e-11) << x;
  }
  EXPECT_EQ(frac_integral_element(0.5, one, 0.0, 1.0, 1.0, Side::kRight), 0.0);
}

TEST(FracIntegral, SquareMatchesAdaptiveOracle) {
  // (1/Gamma(0.4)) int_0^1 (1.7-s)^{-0.6} s^2 ds, mpmath tanh-sinh
  const ShiftedPoly sq{0.0, {0.0, 0.0, 1.0}};
  EXPECT_NEAR(frac_integral_element(0.4, sq, 0.0, 1.0, 1.7), 0.1578291447916741529, 1e-11);
  const ShiftedPoly shifted = recenter(sq, 0.5);
  EXPECT_NEAR(frac_integral_element(0.4, shifted, 0.0, 1.0, 1.7), 0.1578291447916741529, 1e-11);
}

TEST(FracIntegral, RejectsBadOrder) {
  const ShiftedPoly one{0.0, {1.0}};
  EXPECT_THROW(frac_integral_element(0.0, one, 0.0, 1.0, 1.0), ParameterError);
  EXPECT_THROW(frac_integral_element(1.0, one, 0.0, 1.0, 1.0), ParameterError);
}

TEST(FracOperator, SingleCellClosedForm) {
  const Mesh1D m = build_mesh(0.0, 1.0, 1);
  const FracOperator op = assemble_frac_operator(m, build_basis(0), 1.5);
  const double mu = 0.5;
  const double expect = 1.0 / (std::tgamma(mu + 2.0) * std::cos(0.5 * std::numbers::pi * mu));
  EXPECT_NEAR(op.B(0, 0), expect, 1e-11);
  EXPECT_NEAR(op.B(0, 0), 1.0638460810704871412, 1e-11);
}

TEST(FracOperator, TwoLinearCellsMatchQuadratureOracle) {
  // cells [0,1/2], [1/2,1], nodal linear basis, mu = 0.5; mpmath quadrature
  const double ref[4][4] = {
      {0.10746468258052500704, 0.080598511935393755278, 0.037296292414089036129, 0.031475676789775925525},
      {0.080598511935393755278, 0.10746468258052500704, 0.049728389885452048172, 0.037296292414089036129},
      {0.037296292414089036129, 0.049728389885452048172, 0.10746468258052500704, 0.080598511935393755278},
      {0.031475676789775925525, 0.037296292414089036129, 0.080598511935393755278, 0.10746468258052500704},
  };
  const FracOperator op = assemble_frac_operator(build_mesh(0.0, 1.0, 2), build_basis(1), 1.5);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(op.B(i, j), ref[i][j], 1e-12) << i << "," << j;
  }
}

TEST(FracOperator, SymmetricPositiveSemidefinite) {
  std::mt19937 rng(5);
  for (double alpha : {1.05, 1.3, 1.7, 1.95}) {
    const Mesh1D m = build_mesh(-1.0, 2.0, 9);
    const ElementBasis b = build_basis(3);
    const FracOperator op = assemble_frac_operator(m, b, alpha);
    const GlobalMass mass(m, b);
    EXPECT_LE((op.B - op.B.transpose()).cwiseAbs().maxCoeff(), 1e-10 * op.B.cwiseAbs().maxCoeff());
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 100; ++trial) {
      FieldVector q(op.layout);
      for (Eigen::Index i = 0; i < q.values.size(); ++i) q.values(i) = normal(rng);
      const FieldVector p = apply_frac(op, mass, q);
      EXPECT_GE(mass.inner(p.values, q.values), -1e-10);
    }
  }
}

TEST(FracOperator, ApproachesMassAsOrderVanishes) {
  const Mesh1D m = build_mesh(0.0, 1.0, 8);
  const ElementBasis b = build_basis(2);
  const FracOperator op = assemble_frac_operator(m, b, 2.0 - 1e-3);
  const Eigen::MatrixXd M = GlobalMass(m, b).dense();
  EXPECT_LE((op.B - M).cwiseAbs().maxCoeff(), 5e-3 * M.cwiseAbs().maxCoeff());
}

TEST(FracOperator, ZeroInZeroOut) {
  const Mesh1D m = build_mesh(0.0, 1.0, 4);
  const ElementBasis b = build_basis(2);
  const FracOperator op = assemble_frac_operator(m, b, 1.4);
  const GlobalMass mass(m, b);
  EXPECT_EQ(apply_frac(op, mass, FieldVector(op.layout)).values.cwiseAbs().maxCoeff(), 0.0);
  const Mesh1D other = build_mesh(0.0, 1.0, 5);
  EXPECT_THROW(apply_frac(op, mass, FieldVector(layout_of(other, b))), ParameterError);
  EXPECT_THROW(assemble_frac_operator(m, b, 2.0), ParameterError);
  EXPECT_THROW(assemble_frac_operator(m, b, 1.0), ParameterError);
}

TEST(FracCache, RoundTripAndKeyMismatch) {
  const auto dir = std::filesystem::temp_directory_path() / "fracddg_cache_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const Mesh1D m = build_mesh(-1.0, 1.0, 3);
  const ElementBasis b = build_basis(1);
  const FracOperator fresh = cached_frac_operator(m, b, 1.3, dir.string());
  const FracOperator again = cached_frac_operator(m, b, 1.3, dir.string());
  EXPECT_EQ(fresh.B, again.B);
  const FracCacheKey key{-1.0, 1.0, 3, 1, 1.3};
  EXPECT_TRUE(read_frac_cache((dir / key.file_name()).string(), key).has_value());
  const FracCacheKey other{-1.0, 1.0, 3, 1, 1.4};
  EXPECT_FALSE(read_frac_cache((dir / key.file_name()).string(), other).has_value());
  std::filesystem::remove_all(dir);
}

TEST(Riesz, ClassicalLimit) {
  const std::vector<double> sq = {0.0, 0.0, 1.0};
  for (double x : {-0.7, 0.0, 0.4}) EXPECT_DOUBLE_EQ(riesz_frac_deriv_poly(2.0, sq, -1.0, 1.0, x), -2.0);
}

TEST(Riesz, SquareMatchesClosedFormAndOracle) {
  const std::vector<double> sq = {0.0, 0.0, 1.0};
  const double closed = (2.0 / std::tgamma(1.5)) * (2.0 * std::sqrt(0.5)) / (2.0 * std::cos(0.75 * std::numbers::pi));
  const double v = riesz_frac_deriv_poly(1.5, sq, 0.0, 1.0, 0.5);
  EXPECT_NEAR(v, closed, 1e-12);
  EXPECT_NEAR(v, -2.2567583341910251319, 1e-10);
}

TEST(Riesz, SymmetricBumpHasEqualOneSidedTerms) {
  // (x^2-1)^4, alpha = 1.6, x = 0; two-sided singular quadrature oracle
  const std::vector<double> c = {1.0, 0.0, -4.0, 0.0, 6.0, 0.0, -4.0, 0.0, 1.0};
  const double l = caputo_left_poly(1.6, c, -1.0, 1.0, 0.0);
  const double r = caputo_right_poly(1.6, c, -1.0, 1.0, 0.0);
  EXPECT_NEAR(l, r, 1e-11);
  EXPECT_NEAR(l, -3.8422516976794682406, 1e-11);
}

TEST(Riesz, HighMonomialLeftTerm) {
  std::vector<double> c(12, 0.0);
  c[11] = 1.0;
  for (double alpha : {1.1, 1.5, 1.9}) {
    for (double x : {0.3, 1.0}) {
      const double expect = std::exp(std::lgamma(12.0) - std::lgamma(12.0 - alpha)) * std::pow(x, 11.0 - alpha);
      EXPECT_NEAR(caputo_left_poly(alpha, c, 0.0, 1.0, x) / expect, 1.0, 1e-12);
    }
  }
  EXPECT_EQ(caputo_right_poly(1.5, c, 0.0, 1.0, 1.0), 0.0);
  EXPECT_THROW(caputo_left_poly(2.0, c, 0.0, 1.0, 0.5), ParameterError);
  EXPECT_THROW(caputo_left_poly(1.5, c, 0.0, 1.0, 1.5), DomainError);
}

}  // namespace
}  // namespace fracddg
