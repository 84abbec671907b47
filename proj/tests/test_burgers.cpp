#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tobs/burgers.hpp"

using namespace tobs;
using namespace tobs::burgers;

namespace {

// Advection term -u_i (u_{i+1} - u_{i-1}) / (2 dx) with zero ghost values.
Vector advection(const Config& c, const Vector& u) {
  const auto n = u.size();
  Vector a(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l = i > 0 ? u[i - 1] : 0.0;
    const double r = i + 1 < n ? u[i + 1] : 0.0;
    a[i] = -u[i] * (r - l) / (2.0 * c.dx());
  }
  return a;
}

}  // namespace

TEST(BurgersConfig, Defaults) {
  const Config c;
  EXPECT_DOUBLE_EQ(c.L, 2.0 * std::numbers::pi);
  EXPECT_EQ(c.T, 5.0);
  EXPECT_EQ(c.kappa, 0.14);
  EXPECT_EQ(c.Nx, 50);
  EXPECT_EQ(c.Nt, 100);
  EXPECT_EQ(c.state_dim(), 49);
  EXPECT_TRUE(c.violations().empty());
}

TEST(BurgersConfig, ReportsEveryViolation) {
  Config c;
  c.L = -1;
  c.kappa = 0;
  c.Nx = 1;
  c.Nt = 0;
  EXPECT_GE(c.violations().size(), 4u);
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(SensorLayout, Cases) {
  EXPECT_EQ(SensorLayout::case1().indices, (std::vector<int>{20, 21, 29, 30}));
  EXPECT_EQ(SensorLayout::case2().indices, (std::vector<int>{18, 19, 30, 31}));
  const Config c;
  EXPECT_THROW(SensorLayout{}.validate(c), InvalidInput);
  EXPECT_THROW((SensorLayout{{0, 5}}.validate(c)), InvalidInput);
  EXPECT_THROW((SensorLayout{{5, 50}}.validate(c)), InvalidInput);
}

TEST(MakeSystem, ObservePicksSensorComponents) {
  const Config c;
  const auto model = make_system(c, SensorLayout::case1());
  EXPECT_EQ(model.n, 49);
  EXPECT_EQ(model.m, 4);
  const Vector u = Vector::LinSpaced(49, 1.0, 49.0);
  EXPECT_EQ(model.apply_observe(u), (Vector(4) << 20, 21, 29, 30).finished());
  const auto full = make_system(c, SensorLayout::full(c));
  EXPECT_EQ(full.apply_observe(u), u);
  EXPECT_THROW(make_system(c, SensorLayout{}), InvalidInput);
}

TEST(Rhs, ZeroIsEquilibrium) {
  const Config c;
  EXPECT_EQ(semidiscrete_rhs(c, Vector::Zero(49)), Vector::Zero(49));
  EXPECT_EQ(rk4_step(c, Vector::Zero(49)), Vector::Zero(49));
  EXPECT_THROW(semidiscrete_rhs(c, Vector::Zero(48)), InvalidInput);
}

TEST(Rhs, SingleBumpStencil) {
  const Config c;
  Vector u = Vector::Zero(49);
  u[10] = 0.3;
  const Vector r = semidiscrete_rhs(c, u);
  // Only the three stencil points see the bump; advection vanishes at all of them.
  const double d2 = c.kappa / (c.dx() * c.dx());
  EXPECT_DOUBLE_EQ(r[10], -2.0 * 0.3 * d2);
  EXPECT_DOUBLE_EQ(r[9], 0.3 * d2);
  EXPECT_DOUBLE_EQ(r[11], 0.3 * d2);
  EXPECT_LT(r[10], 0.0);
  EXPECT_EQ(r[5], 0.0);
}

TEST(Rhs, MatchesHeatMatrixPlusAdvection) {
  const Config c;
  const Vector u = sample_fourier_initial(c, 3, 0.3, 42);
  const Vector heat = oracle::laplacian(49, c.dx(), c.kappa) * u;
  const Vector r = semidiscrete_rhs(c, u);
  EXPECT_LT((r - advection(c, u) - heat).cwiseAbs().maxCoeff(), 1e-12 * heat.cwiseAbs().maxCoeff());
}

TEST(Rhs, LinearizationIsHeatOperator) {
  const Config c;
  const Vector v = sample_fourier_initial(c, 3, 0.3, 7);
  const double eps = 1e-7;
  const Vector lin = semidiscrete_rhs(c, eps * v) / eps;
  const Vector heat = oracle::laplacian(49, c.dx(), c.kappa) * v;
  EXPECT_LT((lin - heat).norm(), 1e-6 * heat.norm());
}

TEST(Rk4, MatchesGenericRk4OnLibraryRhs) {
  const Config c;
  const Vector u = sample_fourier_initial(c, 3, 0.3, 5);
  const auto f = [&c](const Vector& x) { return semidiscrete_rhs(c, x); };
  EXPECT_LT((rk4_step(c, u) - oracle::rk4(f, u, c.dt())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rk4, HeatSubproblemEqualsTaylorPolynomial) {
  const Config c;
  const Vector u = sample_fourier_initial(c, 3, 0.3, 9);
  // Library rhs with the advection term removed again.
  const auto heat_rhs = [&c](const Vector& x) { return Vector(semidiscrete_rhs(c, x) - advection(c, x)); };
  const Vector step = oracle::rk4(heat_rhs, u, c.dt());
  const Vector poly = oracle::taylor4(oracle::laplacian(49, c.dx(), c.kappa), c.dt()) * u;
  EXPECT_LT((step - poly).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Rk4, BlowUpIsReported) {
  Config c;
  c.Nt = 1;  // dt = T, far outside the stability interval
  Vector u = sample_fourier_initial(c, 3, 0.3, 1) * 1e150;
  EXPECT_THROW(propagate(make_system(c, SensorLayout::case1()), u, 50), NumericalError);
}

TEST(Fourier, DirectEvaluation) {
  const Config c;
  FourierInit f;
  f.NF = 1;
  f.alpha = (Vector(2) << 1.0, -1.0).finished();
  f.beta = Vector::Zero(2);
  const Vector u = f.evaluate(c);
  const Vector ref = oracle::fourier({1.0, -1.0}, {0.0, 0.0}, c.L, c.Nx);
  EXPECT_LT((u - ref).cwiseAbs().maxCoeff(), 1e-14);
  for (int i = 1; i < c.Nx; ++i) EXPECT_NEAR(u[i - 1], 1.0 - std::cos(2 * std::numbers::pi * i / c.Nx), 1e-14);
}

TEST(Fourier, SampledCoefficientsSumToZero) {
  const Config c;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto f = FourierInit::sample(3, 0.3, s);
    ASSERT_EQ(f.alpha.size(), 4);
    EXPECT_NEAR(f.alpha.sum(), 0.0, 1e-15);
    const std::vector<double> a(f.alpha.data(), f.alpha.data() + 4), b(f.beta.data(), f.beta.data() + 4);
    EXPECT_LT((f.evaluate(c) - oracle::fourier(a, b, c.L, c.Nx)).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_EQ(f.evaluate(c), sample_fourier_initial(c, 3, 0.3, s));
  }
  FourierInit zero;
  zero.alpha = Vector::Zero(4);
  zero.beta = Vector::Zero(4);
  EXPECT_EQ(zero.evaluate(c), Vector::Zero(49));
}

TEST(Fourier, RejectsBadParameters) {
  EXPECT_THROW(FourierInit::sample(0, 0.3, 1), InvalidInput);
  EXPECT_THROW(FourierInit::sample(3, 0.0, 1), InvalidInput);
}

TEST(BurgersProperties, ZeroStateStaysZero) {
  const Config c;
  const auto t = propagate(make_system(c, SensorLayout::case1()), Vector::Zero(49), c.Nt);
  for (const auto& s : t.states) EXPECT_EQ(s, Vector::Zero(49));
}

TEST(BurgersProperties, EnergyNonIncreasing) {
  const Config c;
  const auto model = make_system(c, SensorLayout::case1());
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto t = propagate(model, sample_fourier_initial(c, 3, 0.3, s), c.Nt);
    for (int k = 0; k < c.Nt; ++k)
      ASSERT_LE(energy(t[k + 1]), energy(t[k]) + 1e-10) << "seed " << s << " step " << k;
  }
}

TEST(BurgersProperties, HalvingDtConverges) {
  Config coarse;
  Config fine = coarse;
  fine.Nt = 2 * coarse.Nt;
  const Vector u0 = sample_fourier_initial(coarse, 3, 0.3, 2024);
  const Vector a = propagate(make_system(coarse, SensorLayout::case1()), u0, coarse.Nt).states.back();
  const Vector b = propagate(make_system(fine, SensorLayout::case1()), u0, fine.Nt).states.back();
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}
