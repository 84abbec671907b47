#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tobs/burgers.hpp"
#include "tobs/common.hpp"
#include "tobs/dynamics.hpp"

namespace tobs::deep {

enum class Role : std::uint8_t { Training = 0, Validation = 1 };

/// (z, u(z)) pairs: column j of Z is the flattened output window of sample j.
struct Dataset {
  Matrix Z;       ///< p x N
  Vector labels;  ///< N
  Role role = Role::Training;
  std::uint64_t seed = 0;
  double noise_sd = 0.0;
  std::vector<std::int32_t> window_starts;  ///< s of each sample

  Eigen::Index size() const { return labels.size(); }
  int dim() const { return static_cast<int>(Z.rows()); }
  void validate() const;
};

/// Output-window sampling from Fourier-initialized Burgers trajectories.
struct DatagenParams {
  int K = 9;       ///< window holds y(s..s+K)
  int target = 25; ///< label is u_target(s+K), 1-based grid index
  int NF = 3;
  double sigma = 0.3;
};

/// Seed used for trajectory `t` of a dataset built with `seed`.
std::uint64_t trajectory_seed(std::uint64_t seed, long t);

/// `count` trajectories, three windows each (s = 0 and two distinct random
/// starts in [1, Nt-K]). z is time-major: y_1(s), ..., y_m(s), y_1(s+1), ...
/// When noise_sd > 0 every output of the trajectory gets one i.i.d. Gaussian
/// draw before windows are cut. Trajectories are built in parallel; the result
/// is identical for any worker count.
Dataset build_dataset(const burgers::Config& cfg, const burgers::SensorLayout& layout,
                      const DatagenParams& params, long count, double noise_sd,
                      std::uint64_t seed, Role role = Role::Training);

/// The full trajectory behind samples 3t..3t+2 of a dataset built with `seed`.
Trajectory dataset_trajectory(const burgers::Config& cfg, const DatagenParams& params,
                              std::uint64_t seed, long t);

/// Same samples in the given order.
Dataset permuted(const Dataset& d, const std::vector<Eigen::Index>& order);

}  // namespace tobs::deep
