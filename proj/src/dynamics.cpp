#include "tobs/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "tobs/rng.hpp"

namespace tobs {

Vector SystemModel::apply_step(const Vector& x) const {
  require(x.size() == n, "step: state has length " + std::to_string(x.size()) + ", expected " +
                             std::to_string(n));
  Vector next = step(x);
  require(next.size() == n, "step: model returned a state of the wrong length");
  return next;
}

Vector SystemModel::apply_observe(const Vector& x) const {
  require(x.size() == n, "observe: state has length " + std::to_string(x.size()) +
                             ", expected " + std::to_string(n));
  Vector y = observe(x);
  require(y.size() == m, "observe: model returned an output of the wrong length");
  return y;
}

SystemModel make_linear_system(Matrix A, Matrix H) {
  require(A.rows() == A.cols() && A.rows() > 0, "linear system: A must be square and non-empty");
  require(H.cols() == A.rows() && H.rows() > 0, "linear system: H must have n columns");
  SystemModel model;
  model.n = static_cast<int>(A.rows());
  model.m = static_cast<int>(H.rows());
  model.step = [A = std::move(A)](const Vector& x) -> Vector { return A * x; };
  model.observe = [H = std::move(H)](const Vector& x) -> Vector { return H * x; };
  return model;
}

Trajectory propagate(const SystemModel& model, const Vector& x0, int K) {
  require(K >= 1, "propagate: horizon K must be >= 1");
  require(x0.size() == model.n, "propagate: initial state has length " +
                                    std::to_string(x0.size()) + ", expected " +
                                    std::to_string(model.n));
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(K) + 1);
  traj.states.push_back(x0);
  for (int k = 0; k < K; ++k) {
    Vector next;
    try {
      next = model.apply_step(traj.states.back());
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (step " + std::to_string(k + 1) + ")", k + 1);
    }
    if (!next.allFinite())
      throw NumericalError("propagate: non-finite state at step " + std::to_string(k + 1), k + 1);
    traj.states.push_back(std::move(next));
  }
  return traj;
}

OutputSequence observe_trajectory(const SystemModel& model, const Trajectory& traj,
                                  double noise_sd, std::uint64_t seed) {
  require(noise_sd >= 0.0 && std::isfinite(noise_sd), "observe_trajectory: noise_sd must be >= 0");
  OutputSequence seq;
  seq.outputs.reserve(traj.states.size());
  Rng rng(seed);
  for (const auto& x : traj.states) {
    Vector y = model.apply_observe(x);
    if (noise_sd > 0.0)
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise_sd * rng.normal();
    seq.outputs.push_back(std::move(y));
  }
  if (noise_sd > 0.0) seq.noise = NoiseRecord{seed, noise_sd};
  return seq;
}

bool satisfies_recurrence(const SystemModel& model, const Trajectory& traj) {
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    const Vector next = model.apply_step(traj.states[k]);
    if (next.size() != traj.states[k + 1].size()) return false;
    for (Eigen::Index i = 0; i < next.size(); ++i)
      if (next[i] != traj.states[k + 1][i]) return false;
  }
  return true;
}

namespace {

void write_rows(std::ostream& os, const std::vector<Vector>& rows, char sym) {
  const Eigen::Index dim = rows.empty() ? 0 : rows.front().size();
  os << 'k';
  for (Eigen::Index i = 1; i <= dim; ++i) os << ',' << sym << '_' << i;
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    os << k;
    for (Eigen::Index i = 0; i < rows[k].size(); ++i) os << ',' << rows[k][i];
    os << '\n';
  }
  os.precision(old);
}

std::vector<Vector> read_rows(std::istream& is, char sym) {
  std::string line;
  if (!std::getline(is, line)) throw LoadError("csv: missing header");
  std::size_t cols = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (cell != "k") throw LoadError("csv: header must start with 'k'");
    while (std::getline(ss, cell, ',')) {
      if (cell != std::string(1, sym) + "_" + std::to_string(cols + 1))
        throw LoadError("csv: unexpected header column '" + cell + "'");
      ++cols;
    }
  }
  std::vector<Vector> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (std::stoul(cell) != rows.size()) throw LoadError("csv: time index out of sequence");
    Vector v(static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < cols; ++i) {
      if (!std::getline(ss, cell, ',')) throw LoadError("csv: short row");
      v[static_cast<Eigen::Index>(i)] = std::stod(cell);
    }
    rows.push_back(std::move(v));
  }
  return rows;
}

}  // namespace

void write_csv(std::ostream& os, const Trajectory& traj) { write_rows(os, traj.states, 'x'); }

void write_csv(std::ostream& os, const OutputSequence& seq) { write_rows(os, seq.outputs, 'y'); }

Trajectory read_trajectory_csv(std::istream& is) { return Trajectory{read_rows(is, 'x')}; }

OutputSequence read_outputs_csv(std::istream& is) { return OutputSequence{read_rows(is, 'y'), {}}; }

}  // namespace tobs
