#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tobs/common.hpp"

namespace tobs::optim {

struct LbfgsConfig {
  int memory = 20;
  int max_iterations = 1000;
  double grad_tol = 1e-10;  ///< stop when ||g||_inf <= grad_tol * max(1, |f|)
  double c1 = 1e-4;         ///< sufficient decrease
  double c2 = 0.9;          ///< curvature (strong Wolfe)
  int max_line_search = 40;

  void validate() const;
};

enum class Status { Converged, MaxIterations, LineSearchFailed };

const char* to_string(Status s);

/// Objective: returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct Result {
  Vector x;
  double f = 0.0;
  Status status = Status::MaxIterations;
  int iterations = 0;
  int evaluations = 0;
  /// f after each accepted step; entry 0 is the starting value.
  std::vector<double> history;
  /// Set when the run ended on a line-search failure (best point returned).
  bool warning() const { return status == Status::LineSearchFailed; }
};

/// Called after every accepted iteration; returning false stops the run.
using Monitor = std::function<bool(int iteration, double f, const Vector& x)>;

/// Limited-memory BFGS with a strong-Wolfe bracketing/zoom line search.
Result minimize(const Objective& fn, Vector x0, const LbfgsConfig& cfg, const Monitor& monitor = {});

}  // namespace tobs::optim
