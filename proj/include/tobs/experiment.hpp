#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tobs/burgers.hpp"
#include "tobs/dataset.hpp"
#include "tobs/deep_filter.hpp"
#include "tobs/observability.hpp"
#include "tobs/ukf.hpp"

namespace tobs::experiment {

enum class Table1Mode {
  Separate,  ///< noisy row uses a network trained on noisy windows
  Shared,    ///< both rows use the network trained on clean windows
};

/// Full experiment configuration. Every field has a default; a JSON file may
/// override any subset.
struct Config {
  burgers::Config burgers;
  burgers::SensorLayout sensors = burgers::SensorLayout::case1();
  observability::GramianConfig gramian;
  ukf::UkfConfig ukf;
  double ukf_offset_sigma = 0.3;  ///< Fourier sigma of the initial-estimate offset
  deep::DatagenParams datagen;
  long train_trajectories = 10000;
  long validation_trajectories = 10000;
  double noise_sd = 0.028;
  deep::TrainConfig train;
  /// Validation windows used for the averaged index in Table 1 (0 = all).
  long index_samples = 0;
  Table1Mode table1_mode = Table1Mode::Separate;
  std::uint64_t seed = 2024;

  std::vector<std::string> violations() const;
  void validate() const;
};

nlohmann::json to_json(const Config& c);
/// Starts from `base` and applies the keys present in `j`. Unknown keys are
/// reported as violations.
Config from_json(const nlohmann::json& j, const Config& base = {});
Config load_config(const std::string& path);

/// Named seed streams derived from the global seed.
namespace stream {
inline constexpr std::uint64_t kSimulate = 1;
inline constexpr std::uint64_t kSurvey = 2;
inline constexpr std::uint64_t kTruth = 3;
inline constexpr std::uint64_t kMeasurementNoise = 4;
inline constexpr std::uint64_t kOffset = 5;
inline constexpr std::uint64_t kTrainData = 6;
inline constexpr std::uint64_t kValidationData = 7;
inline constexpr std::uint64_t kInit = 8;
inline constexpr std::uint64_t kFigure = 9;
}  // namespace stream

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// Fourier-sampled initial state for `seed` under the config's datagen params.
Vector sample_initial(const Config& c, std::uint64_t seed);

struct IndexResult {
  Vector x0;
  observability::ObservabilityReport report;
};

/// Index of the configured target on the trajectory from sample_initial(seed).
IndexResult index_at(const Config& c, std::uint64_t seed);

struct UkfExperiment {
  Trajectory truth;
  OutputSequence measurements;
  ukf::UkfRun run;
};

/// Truth from the seed, noisy measurements (sd = ukf.R_sd), initial estimate
/// truth(0) + Fourier offset; P0 from ukf.P0_scale or the offset.
UkfExperiment run_ukf(const Config& c, std::uint64_t seed);

struct Table1Row {
  int sensor_case = 1;
  double index_avg = 0.0;
  std::string regime;  ///< "noise_free" or "with_noise"
  double rmse = 0.0;
  std::string trained_on;  ///< "clean" or "noisy"
};

struct CaseArtifacts {
  deep::Dataset train_clean, validation_clean, train_noisy, validation_noisy;
  deep::TrainResult clean, noisy;  ///< `noisy` is empty in Shared mode
};

using Progress = std::function<void(const std::string&)>;

/// Averaged index of the target over the first `index_samples` validation
/// windows (states u(s) of their trajectories).
observability::SurveySummary validation_index(const Config& c, const burgers::SensorLayout& layout,
                                              std::uint64_t validation_seed);

/// Trains and evaluates the deep filter for one sensor layout.
std::vector<Table1Row> table1_case(const Config& c, int sensor_case, CaseArtifacts* artifacts = nullptr,
                                   const Progress& progress = {});

/// Four rows: case 1/2 x noise-free/with-noise.
std::vector<Table1Row> table1(const Config& c, std::vector<CaseArtifacts>* artifacts = nullptr,
                              const Progress& progress = {});

std::string table1_csv(const std::vector<Table1Row>& rows);

/// Deep-filter estimates along one trajectory: for k >= K, the window
/// y(k-K..k) (with noise when noise_sd > 0) is mapped to u_target(k).
/// CSV `k,truth,estimate`.
std::string filter_trajectory_csv(const Config& c, const burgers::SensorLayout& layout,
                                  const deep::Mlp& net, double noise_sd, std::uint64_t seed);

}  // namespace tobs::experiment
