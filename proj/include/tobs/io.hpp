#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tobs/dataset.hpp"
#include "tobs/dynamics.hpp"
#include "tobs/mlp.hpp"
#include "tobs/observability.hpp"

namespace tobs::io {

namespace fs = std::filesystem;

/// 64-bit FNV-1a.
std::uint64_t checksum(std::string_view bytes);
std::uint64_t file_checksum(const fs::path& path);

/// Writes `bytes` to `path` via a temporary sibling and rename, creating
/// parent directories as needed.
void write_atomic(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

// Binary formats: 8-byte magic, u32 version, little-endian fields and IEEE-754
// doubles, trailing u64 checksum over every preceding byte.
std::string encode(const deep::Dataset& d);
deep::Dataset decode_dataset(std::string_view bytes);
std::string encode(const deep::Mlp& net);
deep::Mlp decode_mlp(std::string_view bytes);

void save(const fs::path& path, const deep::Dataset& d);
void save(const fs::path& path, const deep::Mlp& net);
deep::Dataset load_dataset(const fs::path& path);
deep::Mlp load_mlp(const fs::path& path);

void save(const fs::path& path, const Trajectory& traj);  // CSV
Trajectory load_trajectory(const fs::path& path);

nlohmann::json to_json(const observability::ObservabilityReport& r);
observability::ObservabilityReport report_from_json(const nlohmann::json& j);
void save(const fs::path& path, const observability::ObservabilityReport& r);
observability::ObservabilityReport load_report(const fs::path& path);

/// CSV export of a dataset for inspection: `s,label,z_1..z_p`.
std::string dataset_csv(const deep::Dataset& d);

struct ArtifactEntry {
  std::string path;  ///< relative to the manifest directory
  std::uint64_t checksum = 0;
  std::uint64_t bytes = 0;
};

/// Everything needed to regenerate a run: the command, its full resolved
/// configuration and seeds, produced artifacts with checksums, and headline results.
struct ExperimentManifest {
  std::string command;
  std::string code_version;
  std::string created_utc;
  nlohmann::json config;
  nlohmann::json seeds;
  nlohmann::json results;
  std::vector<ArtifactEntry> artifacts;

  /// Records `path` (relative to `root`) with its current checksum.
  void add_artifact(const fs::path& root, const fs::path& relative);
};

nlohmann::json to_json(const ExperimentManifest& m);
ExperimentManifest manifest_from_json(const nlohmann::json& j);
void save(const fs::path& path, const ExperimentManifest& m);
ExperimentManifest load_manifest(const fs::path& path);

/// Problems found when checking artifacts against the manifest in `root`
/// (missing files, checksum mismatches); empty when consistent.
std::vector<std::string> verify_manifest(const ExperimentManifest& m, const fs::path& root);

std::string utc_timestamp();

}  // namespace tobs::io
