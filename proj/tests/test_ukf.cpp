#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "tobs/burgers.hpp"
#include "tobs/ukf.hpp"

using namespace tobs;
using namespace tobs::ukf;

namespace {

Matrix random_matrix(Rng& rng, int r, int c, double scale) {
  Matrix M(r, c);
  for (int i = 0; i < r * c; ++i) M.data()[i] = scale * rng.normal();
  return M;
}

Matrix random_spd(Rng& rng, int n) {
  const Matrix B = random_matrix(rng, n, n, 1.0);
  return B * B.transpose() + 0.5 * Matrix::Identity(n, n);
}

}  // namespace

TEST(UkfConfig, Violations) {
  UkfConfig c;
  c.alpha = 0;
  c.R_sd = 0;
  c.Q_scale = -1;
  EXPECT_EQ(c.violations().size(), 3u);
  EXPECT_TRUE(UkfConfig{}.violations().empty());
}

TEST(SigmaWeights, SumToOne) {
  for (int n : {1, 4, 49}) {
    UkfConfig c;
    const auto w = SigmaWeights::make(n, c);
    EXPECT_EQ(w.mean.size(), 2 * n + 1);
    EXPECT_NEAR(w.mean.sum(), 1.0, 1e-9);
    // The beta correction adds (1 - alpha^2 + beta) to the zeroth covariance weight.
    EXPECT_NEAR(w.cov.sum(), 1.0 + 1.0 - c.alpha * c.alpha + c.beta, 1e-9);
    EXPECT_NEAR(w.cov.sum() - (w.cov[0] - w.mean[0]), 1.0, 1e-9);
  }
}

TEST(UnscentedTransform, ExactOnAffineMaps) {
  Rng rng(4);
  for (int n : {1, 3, 6}) {
    const Matrix A = random_matrix(rng, 4, n, 1.0);
    const Vector b = random_matrix(rng, 4, 1, 1.0);
    const Vector mu = random_matrix(rng, n, 1, 1.0);
    const Matrix P = random_spd(rng, n);
    const auto m = unscented_transform(mu, P, UkfConfig{}, [&](const Vector& x) { return Vector(A * x + b); });
    EXPECT_LT((m.mean - (A * mu + b)).norm(), 1e-10 * (A * mu + b).norm() + 1e-10);
    const Matrix C = A * P * A.transpose();
    EXPECT_LT((m.cov - C).norm(), 1e-10 * C.norm());
  }
}

TEST(Ukf, MatchesKalmanFilterOnLinearSystems) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4, m = 1 + trial % 2;
    const Matrix A = random_matrix(rng, n, n, 0.9 / std::sqrt(n));
    const Matrix H = random_matrix(rng, m, n, 1.0);
    const auto model = make_linear_system(A, H);
    const Vector x0 = random_matrix(rng, n, 1, 1.0);
    const auto truth = propagate(model, x0, 15);
    const auto ys = observe_trajectory(model, truth, 0.1, 50 + trial);
    UkfConfig c;
    c.R_sd = 0.1;
    c.Q_scale = 1e-3;
    const Vector xh = x0 + random_matrix(rng, n, 1, 0.5);
    const Matrix P0 = random_spd(rng, n);
    const auto run = ukf_run(model, ys, c, xh, P0);
    const auto kf = oracle::kalman(A, H, c.Q_scale * Matrix::Identity(n, n),
                                   c.R_sd * c.R_sd * Matrix::Identity(m, m), xh, P0, ys.outputs);
    for (std::size_t k = 0; k < ys.outputs.size(); ++k) {
      EXPECT_LT((run.estimates[k] - kf.means[k]).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial << " k " << k;
      EXPECT_LT((run.covariances[k] - kf.covs[k]).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial << " k " << k;
    }
  }
}

TEST(Ukf, FullInformationConvergesImmediately) {
  Rng rng(6);
  const int n = 4;
  const Matrix A = random_matrix(rng, n, n, 0.4);
  const auto model = make_linear_system(A, Matrix::Identity(n, n));
  const auto truth = propagate(model, random_matrix(rng, n, 1, 1.0), 6);
  const auto ys = observe_trajectory(model, truth, 0.0, 1);
  UkfConfig c;
  c.Q_scale = 0.0;
  c.R_sd = 1e-9;
  c.P0_scale = 1.0;
  const auto run = ukf_run(model, ys, c, Vector::Zero(n));
  for (std::size_t k = 1; k < run.estimates.size(); ++k)
    EXPECT_LT((run.estimates[k] - truth[k]).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Ukf, CovarianceStaysPsdOnBurgers) {
  const burgers::Config bc;
  const auto model = burgers::make_system(bc, burgers::SensorLayout::case1());
  const Vector u0 = burgers::sample_fourier_initial(bc, 3, 0.3, 1);
  const auto truth = propagate(model, u0, 30);
  const auto ys = observe_trajectory(model, truth, 0.028, 2);
  const Vector off = burgers::sample_fourier_initial(bc, 3, 0.3, 3);
  UkfConfig c;
  c.P0_scale = off.squaredNorm() / off.size();
  const auto a = ukf_run(model, ys, c, u0 + off);
  const auto b = ukf_run(model, ys, c, u0 + off);
  for (std::size_t k = 0; k < a.covariances.size(); ++k) {
    const auto& P = a.covariances[k];
    EXPECT_EQ((P - P.transpose()).norm(), 0.0);
    const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().minCoeff();
    EXPECT_GE(lo, -c.psd_tol * P.trace() / P.rows());
    EXPECT_EQ(a.estimates[k], b.estimates[k]);
  }
}

TEST(Ukf, ErrorSeriesAndCsv) {
  const auto model = make_linear_system(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const auto truth = propagate(model, Vector::Ones(2), 3);
  const auto ys = observe_trajectory(model, truth, 0.0, 0);
  UkfConfig c;
  c.P0_scale = 1.0;
  const auto run = ukf_run(model, ys, c, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(initial_error(run, truth, 1), 1.0);
  const auto e = error_series(run, truth, 2);
  ASSERT_EQ(e.size(), 4u);
  EXPECT_LT(e.back(), e.front());
  std::ostringstream os;
  write_target_csv(os, run, truth, 2);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "k,truth,estimate,error");
  EXPECT_THROW(error_series(run, truth, 3), InvalidInput);
}

TEST(Ukf, RejectsBadInput) {
  const auto model = make_linear_system(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const auto truth = propagate(model, Vector::Ones(2), 3);
  const auto ys = observe_trajectory(model, truth, 0.0, 0);
  UkfConfig c;
  EXPECT_THROW(ukf_run(model, ys, c, Vector::Zero(2)), InvalidInput);  // no P0 source
  c.P0_scale = 1.0;
  EXPECT_THROW(ukf_run(model, ys, c, Vector::Zero(3)), InvalidInput);
}
