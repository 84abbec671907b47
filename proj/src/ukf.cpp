#include "tobs/ukf.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace tobs::ukf {

std::vector<std::string> UkfConfig::violations() const {
  std::vector<std::string> v;
  if (!(alpha > 0.0 && alpha <= 1.0)) v.emplace_back("alpha must lie in (0, 1]");
  if (!(beta >= 0.0)) v.emplace_back("beta must be >= 0");
  if (!(Q_scale >= 0.0)) v.emplace_back("Q_scale must be >= 0");
  if (!(R_sd > 0.0)) v.emplace_back("R_sd must be > 0");
  if (!(psd_tol > 0.0)) v.emplace_back("psd_tol must be > 0");
  return v;
}

void UkfConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid UKF config";
  for (const auto& s : v) msg += "; " + s;
  throw InvalidInput(msg);
}

SigmaWeights SigmaWeights::make(int n, const UkfConfig& cfg) {
  SigmaWeights w;
  const double c = cfg.alpha * cfg.alpha * (n + cfg.kappa_sigma);
  require(c > 0.0, "sigma weights: alpha^2 (n + kappa) must be > 0");
  w.lambda = c - n;
  w.mean = Vector::Constant(2 * n + 1, 0.5 / c);
  w.cov = w.mean;
  w.mean[0] = w.lambda / c;
  w.cov[0] = w.lambda / c + (1.0 - cfg.alpha * cfg.alpha + cfg.beta);
  return w;
}

namespace {

// Lower factor L with L L' ~= P. Falls back to a clamped eigendecomposition
// when P is only semidefinite to rounding; throws if P is clearly indefinite.
Matrix covariance_factor(const Matrix& P, double psd_tol, long step) {
  const Matrix Ps = 0.5 * (P + P.transpose());
  Eigen::LLT<Matrix> llt(Ps);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const auto n = static_cast<double>(Ps.rows());
  const double scale = std::max(Ps.trace() / n, std::numeric_limits<double>::min());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Ps);
  if (eig.info() != Eigen::Success) throw NumericalError("ukf: eigensolver failed", step);
  if (eig.eigenvalues().minCoeff() < -psd_tol * scale)
    throw NumericalError("ukf: covariance lost positive semidefiniteness at step " +
                             std::to_string(step),
                         step);
  const Vector clamped = eig.eigenvalues().cwiseMax(1e-12 * scale);
  return eig.eigenvectors() * clamped.cwiseSqrt().asDiagonal();
}

Matrix sigma_points(const Vector& mean, const Matrix& P, const SigmaWeights& w, double psd_tol,
                    long step) {
  const auto n = mean.size();
  const Matrix S = std::sqrt(n + w.lambda) * covariance_factor(P, psd_tol, step);
  Matrix chi(n, 2 * n + 1);
  chi.col(0) = mean;
  for (Eigen::Index i = 0; i < n; ++i) {
    chi.col(1 + i) = mean + S.col(i);
    chi.col(1 + n + i) = mean - S.col(i);
  }
  return chi;
}

// Weighted mean written relative to the central point; the weights sum to 1,
// and this form avoids cancellation against the large negative central weight.
Vector weighted_mean(const Matrix& pts, const SigmaWeights& w) {
  Vector mean = pts.col(0);
  for (Eigen::Index i = 1; i < pts.cols(); ++i) mean += w.mean[i] * (pts.col(i) - pts.col(0));
  return mean;
}

Matrix weighted_cross(const Matrix& a, const Vector& amean, const Matrix& b, const Vector& bmean,
                      const SigmaWeights& w) {
  const Matrix da = a.colwise() - amean;
  const Matrix db = b.colwise() - bmean;
  return da * w.cov.asDiagonal() * db.transpose();
}

// Rounding in P - K Pyy K' (or in the weighted sums) is relative to the operands,
// so indefiniteness is judged against `ref_trace`, the larger trace on either side
// of the operation. Eigenvalues that are negative only to rounding are clamped to 0.
void enforce_psd(Matrix& P, double ref_trace, double psd_tol, long step) {
  if (!P.allFinite()) throw NumericalError("ukf: non-finite covariance at step " + std::to_string(step), step);
  const auto n = static_cast<double>(P.rows());
  const double scale = std::max(std::max(P.trace(), ref_trace) / n, std::numeric_limits<double>::min());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(P);
  if (eig.info() != Eigen::Success) throw NumericalError("ukf: eigensolver failed", step);
  const double lo = eig.eigenvalues().minCoeff();
  if (lo < -psd_tol * scale)
    throw NumericalError("ukf: covariance lost positive semidefiniteness at step " +
                             std::to_string(step),
                         step);
  if (lo < 0.0) {
    P = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
    P = 0.5 * (P + P.transpose()).eval();
  }
}

Matrix apply_columns(const std::function<Vector(const Vector&)>& fn, const Matrix& pts) {
  Vector first = fn(pts.col(0));
  Matrix out(first.size(), pts.cols());
  out.col(0) = first;
  for (Eigen::Index i = 1; i < pts.cols(); ++i) out.col(i) = fn(pts.col(i));
  return out;
}

}  // namespace

Moments unscented_transform(const Vector& mean, const Matrix& cov, const UkfConfig& cfg,
                            const std::function<Vector(const Vector&)>& fn) {
  const auto w = SigmaWeights::make(static_cast<int>(mean.size()), cfg);
  const Matrix chi = sigma_points(mean, cov, w, cfg.psd_tol, -1);
  const Matrix Y = apply_columns(fn, chi);
  Moments m;
  m.mean = weighted_mean(Y, w);
  m.cov = weighted_cross(Y, m.mean, Y, m.mean, w);
  m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();
  return m;
}

UkfRun ukf_run(const SystemModel& model, const OutputSequence& measurements, const UkfConfig& cfg,
               const Vector& x0_hat, const std::optional<Matrix>& P0) {
  cfg.validate();
  require(measurements.outputs.size() >= 2, "ukf_run: need at least two measurements");
  require(x0_hat.size() == model.n, "ukf_run: initial estimate has the wrong length");
  for (const auto& y : measurements.outputs)
    require(y.size() == model.m, "ukf_run: measurement has the wrong length");

  const int n = model.n;
  const auto w = SigmaWeights::make(n, cfg);
  const Matrix Q = cfg.Q_scale * Matrix::Identity(n, n);
  const Matrix R = cfg.R_sd * cfg.R_sd * Matrix::Identity(model.m, model.m);

  Matrix P;
  if (P0) {
    require(P0->rows() == n && P0->cols() == n, "ukf_run: P0 must be n x n");
    P = *P0;
  } else {
    require(cfg.P0_scale > 0.0, "ukf_run: P0_scale must be > 0 when P0 is not given");
    P = cfg.P0_scale * Matrix::Identity(n, n);
  }

  UkfRun run;
  run.initial_estimate = x0_hat;
  Vector x = x0_hat;
  const auto observe = [&model](const Vector& s) { return model.apply_observe(s); };
  const auto step = [&model](const Vector& s) { return model.apply_step(s); };

  for (std::size_t k = 0; k < measurements.outputs.size(); ++k) {
    const long kk = static_cast<long>(k);
    if (k > 0) {
      const Matrix chi = sigma_points(x, P, w, cfg.psd_tol, kk);
      const Matrix X = apply_columns(step, chi);
      x = weighted_mean(X, w);
      const double before = P.trace();
      P = weighted_cross(X, x, X, x, w) + Q;
      P = 0.5 * (P + P.transpose()).eval();
      enforce_psd(P, before, cfg.psd_tol, kk);
    }
    const Matrix chi = sigma_points(x, P, w, cfg.psd_tol, kk);
    const Matrix Y = apply_columns(observe, chi);
    const Vector yhat = weighted_mean(Y, w);
    const Matrix Pyy = weighted_cross(Y, yhat, Y, yhat, w) + R;
    const Matrix Pxy = weighted_cross(chi, x, Y, yhat, w);
    const Eigen::LDLT<Matrix> solver(Pyy);
    const Matrix gain = solver.solve(Pxy.transpose()).transpose();
    x += gain * (measurements.outputs[k] - yhat);
    const double prior = P.trace();
    P -= gain * Pyy * gain.transpose();
    P = 0.5 * (P + P.transpose()).eval();

    if (!x.allFinite()) throw NumericalError("ukf: non-finite estimate at step " + std::to_string(k), kk);
    enforce_psd(P, prior, cfg.psd_tol, kk);
    run.estimates.push_back(x);
    run.covariances.push_back(P);
  }
  return run;
}

std::vector<double> error_series(const UkfRun& run, const Trajectory& truth, int target) {
  require(run.estimates.size() == truth.states.size(), "error_series: length mismatch");
  require(target >= 1 && target <= truth.dim(), "error_series: target out of range");
  std::vector<double> e;
  e.reserve(run.estimates.size());
  for (std::size_t k = 0; k < run.estimates.size(); ++k)
    e.push_back(std::abs(run.estimates[k][target - 1] - truth.states[k][target - 1]));
  return e;
}

double initial_error(const UkfRun& run, const Trajectory& truth, int target) {
  require(target >= 1 && target <= truth.dim(), "initial_error: target out of range");
  return std::abs(run.initial_estimate[target - 1] - truth.states.front()[target - 1]);
}

void write_target_csv(std::ostream& os, const UkfRun& run, const Trajectory& truth, int target) {
  const auto err = error_series(run, truth, target);
  const auto old = os.precision(17);
  os << "k,truth,estimate,error\n";
  for (std::size_t k = 0; k < err.size(); ++k)
    os << k << ',' << truth.states[k][target - 1] << ',' << run.estimates[k][target - 1] << ','
       << err[k] << '\n';
  os.precision(old);
}

}  // namespace tobs::ukf
