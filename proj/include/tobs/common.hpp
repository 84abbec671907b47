#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace tobs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a caller passes inputs that violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produces non-finite values or loses definiteness.
/// `step()` is the time index (or sample/perturbation id) at which it happened,
/// -1 when not applicable.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long step = -1)
      : std::runtime_error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Thrown by the persistence layer (bad magic, version, checksum, truncation).
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInput(msg);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace tobs
