#include "tobs/dataset.hpp"

#include <array>

#include "tobs/dynamics.hpp"
#include "tobs/parallel.hpp"
#include "tobs/rng.hpp"

namespace tobs::deep {

namespace {
constexpr int kWindowsPerTrajectory = 3;

// Stream ids inside one trajectory's seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kWindowStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
}  // namespace

void Dataset::validate() const {
  require(Z.cols() == labels.size(), "dataset: sample count mismatch between Z and labels");
  require(window_starts.empty() || static_cast<Eigen::Index>(window_starts.size()) == labels.size(),
          "dataset: window_starts must be empty or one per sample");
}

std::uint64_t trajectory_seed(std::uint64_t seed, long t) {
  return derive_seed(seed, static_cast<std::uint64_t>(t));
}

Dataset build_dataset(const burgers::Config& cfg, const burgers::SensorLayout& layout,
                      const DatagenParams& params, long count, double noise_sd,
                      std::uint64_t seed, Role role) {
  cfg.validate();
  layout.validate(cfg);
  require(count >= 1, "build_dataset: count must be >= 1");
  require(params.K >= 1, "build_dataset: K must be >= 1");
  require(params.K + 1 <= cfg.Nt, "build_dataset: window length K+1 exceeds Nt");
  require(cfg.Nt - params.K >= 2, "build_dataset: need two distinct random window starts");
  require(params.target >= 1 && params.target <= cfg.state_dim(), "build_dataset: target out of range");
  require(noise_sd >= 0.0, "build_dataset: noise_sd must be >= 0");

  const auto model = burgers::make_system(cfg, layout);
  const int m = model.m;
  const int p = m * (params.K + 1);
  const Eigen::Index total = count * kWindowsPerTrajectory;

  Dataset d;
  d.Z.resize(p, total);
  d.labels.resize(total);
  d.window_starts.assign(static_cast<std::size_t>(total), 0);
  d.role = role;
  d.seed = seed;
  d.noise_sd = noise_sd;

  std::vector<std::string> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic, 8) num_threads(worker_count())
  for (long t = 0; t < count; ++t) {
    try {
      const std::uint64_t ts = trajectory_seed(seed, t);
      const Vector u0 = burgers::sample_fourier_initial(cfg, params.NF, params.sigma,
                                                        derive_seed(ts, kInitStream));
      const Trajectory traj = propagate(model, u0, cfg.Nt);
      const OutputSequence ys = observe_trajectory(model, traj, noise_sd, derive_seed(ts, kNoiseStream));

      Rng rng(derive_seed(ts, kWindowStream));
      std::array<int, kWindowsPerTrajectory> starts{0, 0, 0};
      starts[1] = static_cast<int>(rng.uniform_int(1, cfg.Nt - params.K));
      do {
        starts[2] = static_cast<int>(rng.uniform_int(1, cfg.Nt - params.K));
      } while (starts[2] == starts[1]);

      for (int w = 0; w < kWindowsPerTrajectory; ++w) {
        const Eigen::Index col = t * kWindowsPerTrajectory + w;
        const int s = starts[static_cast<std::size_t>(w)];
        for (int k = 0; k <= params.K; ++k) d.Z.block(k * m, col, m, 1) = ys.outputs[static_cast<std::size_t>(s + k)];
        d.labels[col] = traj.states[static_cast<std::size_t>(s + params.K)][params.target - 1];
        d.window_starts[static_cast<std::size_t>(col)] = s;
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(t)] = "trajectory " + std::to_string(t) + ": " + e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw NumericalError("build_dataset: " + e);
  return d;
}

Trajectory dataset_trajectory(const burgers::Config& cfg, const DatagenParams& params,
                              std::uint64_t seed, long t) {
  const auto model = burgers::make_system(cfg, burgers::SensorLayout::full(cfg));
  const Vector u0 = burgers::sample_fourier_initial(
      cfg, params.NF, params.sigma, derive_seed(trajectory_seed(seed, t), kInitStream));
  return propagate(model, u0, cfg.Nt);
}

Dataset permuted(const Dataset& d, const std::vector<Eigen::Index>& order) {
  require(static_cast<Eigen::Index>(order.size()) == d.size(), "permuted: order has the wrong length");
  Dataset out = d;
  for (std::size_t j = 0; j < order.size(); ++j) {
    const auto src = order[j];
    out.Z.col(static_cast<Eigen::Index>(j)) = d.Z.col(src);
    out.labels[static_cast<Eigen::Index>(j)] = d.labels[src];
    if (!d.window_starts.empty()) out.window_starts[j] = d.window_starts[static_cast<std::size_t>(src)];
  }
  return out;
}

}  // namespace tobs::deep
