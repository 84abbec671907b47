#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tobs/common.hpp"
#include "tobs/dynamics.hpp"

namespace tobs::ukf {

struct UkfConfig {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa_sigma = 0.0;
  /// P0 = P0_scale * I. Non-positive means "derive from the initial offset":
  /// mean squared offset component, ||offset||^2 / n.
  double P0_scale = 0.0;
  double Q_scale = 1e-8;
  double R_sd = 0.028;
  /// Relative PSD tolerance: min eig(P) >= -psd_tol * trace / n, with the trace taken
  /// on the larger side of each predict or update. Smaller negative eigenvalues are clamped.
  double psd_tol = 1e-8;

  std::vector<std::string> violations() const;
  void validate() const;
};

/// Scaled unscented transform weights for dimension n.
struct SigmaWeights {
  double lambda = 0.0;
  Vector mean;  ///< 2n+1 mean weights
  Vector cov;   ///< 2n+1 covariance weights (beta correction on entry 0)

  static SigmaWeights make(int n, const UkfConfig& cfg);
};

struct UkfRun {
  Vector initial_estimate;          ///< prior mean before assimilating y(0)
  std::vector<Vector> estimates;    ///< posterior means x^(k), k = 0..K
  std::vector<Matrix> covariances;  ///< posterior P(k)
};

/// Unscented Kalman filter over measurements y(0..K): y(0) updates the prior
/// (x0_hat, P0); each later step predicts through f and updates with y(k).
/// `P0` overrides P0_scale * I when given.
UkfRun ukf_run(const SystemModel& model, const OutputSequence& measurements, const UkfConfig& cfg,
               const Vector& x0_hat, const std::optional<Matrix>& P0 = std::nullopt);

/// |x^_target(k) - x_target(k)| for k = 0..K (1-based target).
std::vector<double> error_series(const UkfRun& run, const Trajectory& truth, int target);

/// Initial prior error |x0_hat_target - x_target(0)|.
double initial_error(const UkfRun& run, const Trajectory& truth, int target);

/// CSV `k,truth,estimate,error` for one target component.
void write_target_csv(std::ostream& os, const UkfRun& run, const Trajectory& truth, int target);

/// Mean and covariance of the affine push-forward through the sigma points;
/// exposed for testing the transform itself.
struct Moments {
  Vector mean;
  Matrix cov;
};
Moments unscented_transform(const Vector& mean, const Matrix& cov, const UkfConfig& cfg,
                            const std::function<Vector(const Vector&)>& fn);

}  // namespace tobs::ukf
