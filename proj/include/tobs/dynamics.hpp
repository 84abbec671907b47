#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tobs/common.hpp"

namespace tobs {

/// Deterministic discrete-time system x(k+1) = f(x(k)), y(k) = h(x(k)).
///
/// `step` and `observe` must be pure: identical inputs give bit-identical
/// outputs, and they may be called concurrently.
struct SystemModel {
  int n = 0;  ///< state dimension
  int m = 0;  ///< output dimension
  std::function<Vector(const Vector&)> step;
  std::function<Vector(const Vector&)> observe;

  /// f(x), with dimension checks on input and result.
  Vector apply_step(const Vector& x) const;
  /// h(x), with dimension checks on input and result.
  Vector apply_observe(const Vector& x) const;
};

/// Linear time-invariant model x(k+1) = A x(k), y(k) = H x(k).
SystemModel make_linear_system(Matrix A, Matrix H);

/// States x(0..K) of one propagated trajectory.
struct Trajectory {
  std::vector<Vector> states;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
  int dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
  const Vector& operator[](std::size_t k) const { return states[k]; }
};

struct NoiseRecord {
  std::uint64_t seed = 0;
  double sd = 0.0;
};

/// Outputs y(0..K), optionally corrupted by recorded i.i.d. Gaussian noise.
struct OutputSequence {
  std::vector<Vector> outputs;
  std::optional<NoiseRecord> noise;

  int horizon() const { return static_cast<int>(outputs.size()) - 1; }
  int dim() const { return outputs.empty() ? 0 : static_cast<int>(outputs.front().size()); }
  const Vector& operator[](std::size_t k) const { return outputs[k]; }
};

/// Runs the recurrence for K steps from x0. Throws NumericalError (with the
/// step index) if a state becomes non-finite.
Trajectory propagate(const SystemModel& model, const Vector& x0, int K);

/// y(k) = h(x(k)) + noise, noise ~ N(0, noise_sd^2) i.i.d. per component,
/// drawn from a stream determined only by `seed`.
OutputSequence observe_trajectory(const SystemModel& model, const Trajectory& traj,
                                  double noise_sd, std::uint64_t seed);

/// True when states[k+1] == step(states[k]) bit-exactly for all k.
bool satisfies_recurrence(const SystemModel& model, const Trajectory& traj);

// CSV with header `k,x_1,...,x_n` (resp. `k,y_1,...,y_m`), 17 significant digits.
void write_csv(std::ostream& os, const Trajectory& traj);
void write_csv(std::ostream& os, const OutputSequence& seq);
Trajectory read_trajectory_csv(std::istream& is);
OutputSequence read_outputs_csv(std::istream& is);

}  // namespace tobs
