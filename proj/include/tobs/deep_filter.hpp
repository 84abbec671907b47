#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tobs/dataset.hpp"
#include "tobs/lbfgs.hpp"
#include "tobs/mlp.hpp"

namespace tobs::deep {

struct LossGradient {
  double loss = 0.0;
  Vector gradient;  ///< same layout as Mlp::parameters()
};

/// Mean squared error over the dataset and its exact gradient by
/// backpropagation. Samples are split into fixed-size blocks processed in
/// parallel and reduced in block order, so the result does not depend on the
/// worker count.
LossGradient loss_and_gradient(const Mlp& net, const Dataset& data);

/// sqrt(mean((u_NN(z) - u)^2)).
double evaluate_rmse(const Mlp& net, const Dataset& data);

struct TrainConfig {
  optim::LbfgsConfig optimizer{20, 1000, 1e-10, 1e-4, 0.9, 40};
  std::uint64_t init_seed = 1;
  Architecture arch;
  /// Fit input standardization (mean/sd per coordinate) on the training set.
  bool standardize_inputs = true;
  /// Fit an output affine map so training labels fall inside +/- 1/output_margin
  /// of the activation range; only used when the last layer is squashed.
  bool fit_output_scale = true;
  double output_margin = 1.5;

  void validate() const;
};

struct TrainResult {
  Mlp net;
  std::vector<double> loss_history;  ///< accepted-step losses, nonincreasing
  optim::Status status = optim::Status::MaxIterations;
  int iterations = 0;
  bool warning = false;  ///< line search gave up; `net` is the best point found
};

/// Sets the normalization constants of `net` from a training set.
void fit_normalization(Mlp& net, const Dataset& train_set, const TrainConfig& cfg);

/// L-BFGS on the MSE loss starting from `net` as given (normalization untouched).
TrainResult train(const Mlp& net, const Dataset& train_set, const TrainConfig& cfg,
                  const optim::Monitor& monitor = {});

/// Fresh network from cfg.arch / cfg.init_seed, normalized to the training set, then trained.
TrainResult train_from_scratch(const Dataset& train_set, const TrainConfig& cfg,
                               const optim::Monitor& monitor = {});

namespace reference {

/// Per-sample scalar loops, no matrix kernels. Test oracle for the batched path.
double forward(const Mlp& net, const Vector& z);
LossGradient loss_and_gradient(const Mlp& net, const Dataset& data);

}  // namespace reference

}  // namespace tobs::deep
