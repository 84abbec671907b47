#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the library's numerical kernels.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "tobs/rng.hpp"

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Dense heat operator kappa * D2 on the interior grid with zero boundaries.
inline Mat laplacian(int n, double dx, double kappa) {
  Mat A = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = -2.0;
    if (i > 0) A(i, i - 1) = 1.0;
    if (i + 1 < n) A(i, i + 1) = 1.0;
  }
  return kappa / (dx * dx) * A;
}

// Degree-4 Taylor polynomial of exp(dt A), which is what one RK4 step computes on a linear ODE.
inline Mat taylor4(const Mat& A, double dt) {
  const Mat I = Mat::Identity(A.rows(), A.cols());
  const Mat B = dt * A;
  const Mat B2 = B * B;
  const Mat B3 = B2 * B;
  return I + B + B2 / 2.0 + B3 / 6.0 + B3 * B / 24.0;
}

// Generic RK4 for a test-supplied right-hand side.
template <class F>
Vec rk4(const F& f, const Vec& u, double dt) {
  const Vec k1 = f(u);
  const Vec k2 = f(u + 0.5 * dt * k1);
  const Vec k3 = f(u + 0.5 * dt * k2);
  const Vec k4 = f(u + dt * k3);
  return u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Truncated Fourier series at interior grid points, coefficient by coefficient.
inline Vec fourier(const std::vector<double>& alpha, const std::vector<double>& beta, double L, int Nx) {
  Vec u(Nx - 1);
  for (int i = 1; i < Nx; ++i) {
    const double x = i * L / Nx;
    double s = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      const double w = 2.0 * std::numbers::pi * static_cast<double>(j) * x / L;
      s += alpha[j] * std::cos(w) + beta[j] * std::sin(w);
    }
    u[i - 1] = s;
  }
  return u;
}

// Observability Gramian of a linear system built from the stacked observability matrix.
inline Mat linear_gramian(const Mat& A, const Mat& H, int K) {
  const auto m = H.rows(), n = A.rows();
  Mat O(m * (K + 1), n);
  Mat Ak = Mat::Identity(n, n);
  for (int k = 0; k <= K; ++k) {
    O.middleRows(k * m, m) = H * Ak;
    Ak = A * Ak;
  }
  return O.transpose() * O;
}

inline Mat matrix_power(const Mat& A, int K) {
  Mat P = Mat::Identity(A.rows(), A.cols());
  for (int k = 0; k < K; ++k) P = A * P;
  return P;
}

// sqrt(max (F dx)^2 s.t. dx' G dx = 1) by random search over G-normalized directions:
// the first half is uniform in whitened coordinates, the second half refines around
// the best direction found so far with a shrinking radius.
inline double brute_force_index(const Mat& G, const Vec& F, long directions, std::uint64_t seed) {
  const Eigen::LLT<Mat> llt(G);
  const Mat Linv = llt.matrixL().solve(Mat::Identity(G.rows(), G.cols()));
  // dx = L^{-T} w with |w| = 1 gives dx' G dx = 1.
  const Vec c = Linv * F;  // F dx = c' w
  tobs::Rng rng(seed);
  const auto n = G.rows();
  Vec best = Vec::Zero(n);
  double best_val = -1.0;
  const auto draw = [&](Vec w) {
    w.normalize();
    const double v = std::abs(c.dot(w));
    if (v > best_val) {
      best_val = v;
      best = w;
    }
  };
  for (long t = 0; t < directions; ++t) {
    Vec w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = rng.normal();
    if (t < directions / 2) {
      draw(w);
    } else {
      const double radius = 0.5 * std::pow(1e-4, static_cast<double>(t - directions / 2) / (directions / 2));
      draw(best + radius * w);
    }
  }
  return best_val;
}

// Textbook Kalman filter matching the UKF's conventions: y(0) updates the prior,
// then predict/update for each later measurement.
struct KalmanRun {
  std::vector<Vec> means;
  std::vector<Mat> covs;
};

inline KalmanRun kalman(const Mat& A, const Mat& H, const Mat& Q, const Mat& R, const Vec& x0, const Mat& P0,
                        const std::vector<Vec>& ys) {
  KalmanRun out;
  Vec x = x0;
  Mat P = P0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    if (k > 0) {
      x = A * x;
      P = A * P * A.transpose() + Q;
    }
    const Mat S = H * P * H.transpose() + R;
    const Mat Kg = P * H.transpose() * S.inverse();
    x = x + Kg * (ys[k] - H * x);
    const Mat IKH = Mat::Identity(P.rows(), P.cols()) - Kg * H;
    P = IKH * P * IKH.transpose() + Kg * R * Kg.transpose();  // Joseph form
    out.means.push_back(x);
    out.covs.push_back(P);
  }
  return out;
}

// Scalar-loop network evaluation: tanh on every layer, then the output affine map.
inline double mlp_forward(const std::vector<Mat>& W, const std::vector<Vec>& b, const Vec& mean, const Vec& scale,
                          double offset, double out_scale, const Vec& z) {
  std::vector<double> a(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) a[static_cast<std::size_t>(i)] = (z[i] - mean[i]) / scale[i];
  for (std::size_t l = 0; l < W.size(); ++l) {
    std::vector<double> next(static_cast<std::size_t>(W[l].rows()));
    for (Eigen::Index r = 0; r < W[l].rows(); ++r) {
      double s = b[l][r];
      for (Eigen::Index c = 0; c < W[l].cols(); ++c) s += W[l](r, c) * a[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = std::tanh(s);
    }
    a = std::move(next);
  }
  return offset + out_scale * a[0];
}

// Mean squared error of the same network in long double, for finite
// differences whose rounding error must stay below tiny gradient entries.
inline long double mlp_loss_extended(const std::vector<Mat>& W, const std::vector<Vec>& b, const Vec& mean,
                                     const Vec& scale, double offset, double out_scale, const Mat& Z,
                                     const Vec& labels) {
  long double total = 0.0L;
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    std::vector<long double> a(static_cast<std::size_t>(Z.rows()));
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
      a[static_cast<std::size_t>(i)] = (static_cast<long double>(Z(i, j)) - mean[i]) / scale[i];
    for (std::size_t l = 0; l < W.size(); ++l) {
      std::vector<long double> next(static_cast<std::size_t>(W[l].rows()));
      for (Eigen::Index r = 0; r < W[l].rows(); ++r) {
        long double s = b[l][r];
        for (Eigen::Index c = 0; c < W[l].cols(); ++c)
          s += static_cast<long double>(W[l](r, c)) * a[static_cast<std::size_t>(c)];
        next[static_cast<std::size_t>(r)] = std::tanh(s);
      }
      a = std::move(next);
    }
    const long double e = offset + static_cast<long double>(out_scale) * a[0] - labels[j];
    total += e * e;
  }
  return total / static_cast<long double>(Z.cols());
}

}  // namespace oracle
