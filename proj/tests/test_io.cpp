#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "tobs/burgers.hpp"
#include "tobs/experiment.hpp"
#include "tobs/io.hpp"

using namespace tobs;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tobs_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

deep::Dataset tiny_dataset() {
  deep::Dataset d;
  d.Z = Matrix::Random(40, 3);
  d.labels = Vector::Random(3);
  d.role = deep::Role::Validation;
  d.seed = 0xDEADBEEFCAFEULL;
  d.noise_sd = 0.028;
  d.window_starts = {0, 17, 88};
  return d;
}

experiment::Config tiny_config() {
  experiment::Config c;
  c.train_trajectories = 40;
  c.validation_trajectories = 40;
  c.index_samples = 4;
  c.train.arch.hidden_layers = 2;
  c.train.arch.width = 6;
  c.train.optimizer.max_iterations = 15;
  return c;
}

}  // namespace

TEST(Binary, DatasetRoundTrip) {
  const auto d = tiny_dataset();
  const auto dir = scratch("ds");
  io::save(dir / "d.bin", d);
  const auto e = io::load_dataset(dir / "d.bin");
  EXPECT_EQ(e.Z, d.Z);
  EXPECT_EQ(e.labels, d.labels);
  EXPECT_EQ(e.role, d.role);
  EXPECT_EQ(e.seed, d.seed);
  EXPECT_EQ(e.noise_sd, d.noise_sd);
  EXPECT_EQ(e.window_starts, d.window_starts);
  EXPECT_EQ(io::encode(e), io::encode(d));
  // Leftover temp files from the atomic write would show up here.
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 1);
}

TEST(Binary, MlpRoundTrip) {
  auto net = deep::make_mlp(deep::Architecture{}, 5);
  net.input_mean = Vector::Random(40);
  net.input_scale = Vector::Random(40).cwiseAbs().array() + 0.1;
  net.output_offset = -0.3;
  net.output_scale = 2.9;
  const auto back = io::decode_mlp(io::encode(net));
  EXPECT_EQ(back.parameters(), net.parameters());
  EXPECT_EQ(back.input_mean, net.input_mean);
  EXPECT_EQ(back.input_scale, net.input_scale);
  EXPECT_EQ(back.output_offset, net.output_offset);
  EXPECT_EQ(back.output_scale, net.output_scale);
  EXPECT_EQ(back.activation, net.activation);
  EXPECT_EQ(back.linear_output, net.linear_output);
}

TEST(Binary, CorruptedByteIsRejected) {
  const std::string bytes = io::encode(tiny_dataset());
  for (std::size_t pos : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    std::string bad = bytes;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x10);
    EXPECT_THROW(io::decode_dataset(bad), LoadError) << "byte " << pos;
  }
  EXPECT_THROW(io::decode_dataset(bytes.substr(0, 10)), LoadError);
  EXPECT_THROW(io::decode_mlp(bytes), LoadError);  // wrong magic
}

TEST(Binary, UnknownVersionIsRejected) {
  std::string bytes = io::encode(tiny_dataset());
  bytes[8] = 7;  // version field follows the magic
  const std::string body = bytes.substr(0, bytes.size() - 8);
  const std::uint64_t sum = io::checksum(body);
  std::string fixed = body + std::string(reinterpret_cast<const char*>(&sum), 8);
  try {
    io::decode_dataset(fixed);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Files, TrajectoryAndReport) {
  const auto dir = scratch("files");
  const burgers::Config c;
  const auto t = propagate(burgers::make_system(c, burgers::SensorLayout::case1()),
                           burgers::sample_fourier_initial(c, 3, 0.3, 1), 5);
  io::save(dir / "t.csv", t);
  const auto t2 = io::load_trajectory(dir / "t.csv");
  for (std::size_t k = 0; k < t.states.size(); ++k) EXPECT_EQ(t2[k], t[k]);

  observability::ObservabilityReport r;
  r.index = std::numeric_limits<double>::infinity();
  r.min_eig_G = -1e-15;
  r.effective_rank = 40;
  io::save(dir / "r.json", r);
  const auto r2 = io::load_report(dir / "r.json");
  EXPECT_EQ(r2.index, r.index);
  EXPECT_EQ(r2.min_eig_G, r.min_eig_G);
  EXPECT_EQ(r2.effective_rank, 40);
  r.index = 4.25;
  r.maximizer = Vector::LinSpaced(3, 0, 1);
  io::save(dir / "r.json", r);
  EXPECT_EQ(io::load_report(dir / "r.json").maximizer, r.maximizer);
  EXPECT_THROW(io::load_report(dir / "missing.json"), LoadError);
}

TEST(Manifest, RoundTripAndVerify) {
  const auto dir = scratch("manifest");
  io::ExperimentManifest m;
  m.command = "test";
  m.code_version = "x";
  m.created_utc = io::utc_timestamp();
  m.config = {{"a", 1}};
  m.seeds = {{"global", 5}};
  m.results = {{"rmse", 0.125}};
  io::write_atomic(dir / "csv" / "a.csv", "k,v\n0,1\n");
  m.add_artifact(dir, "csv/a.csv");
  io::save(dir / "manifest.json", m);
  const auto back = io::load_manifest(dir / "manifest.json");
  EXPECT_EQ(io::to_json(back), io::to_json(m));
  EXPECT_TRUE(io::verify_manifest(back, dir).empty());
  io::write_atomic(dir / "csv" / "a.csv", "k,v\n0,2\n");
  EXPECT_EQ(io::verify_manifest(back, dir).size(), 1u);
  fs::remove(dir / "csv" / "a.csv");
  EXPECT_EQ(io::verify_manifest(back, dir).size(), 1u);
}

TEST(Manifest, RegenerateReproducesResults) {
  const auto dir = scratch("regen");
  const auto c = tiny_config();
  const auto rows = experiment::table1_case(c, 1);
  io::ExperimentManifest m;
  m.command = "table1_case 1";
  m.config = experiment::to_json(c);
  m.seeds = {{"global", c.seed}};
  m.results = {{"rmse_clean", rows[0].rmse}, {"rmse_noisy", rows[1].rmse}, {"index", rows[0].index_avg}};
  io::save(dir / "manifest.json", m);

  const auto loaded = io::load_manifest(dir / "manifest.json");
  const auto c2 = experiment::from_json(loaded.config);
  const auto again = experiment::table1_case(c2, 1);
  EXPECT_EQ(again[0].rmse, loaded.results["rmse_clean"].get<double>());
  EXPECT_EQ(again[1].rmse, loaded.results["rmse_noisy"].get<double>());
  EXPECT_EQ(again[0].index_avg, loaded.results["index"].get<double>());
}

TEST(Config, JsonRoundTrip) {
  auto c = tiny_config();
  c.sensors = burgers::SensorLayout::case2();
  c.table1_mode = experiment::Table1Mode::Shared;
  c.gramian.delta = 2e-3;
  const auto j = experiment::to_json(c);
  EXPECT_EQ(experiment::to_json(experiment::from_json(j)), j);
}

TEST(Config, PartialOverrides) {
  const auto c = experiment::from_json(json{{"Nt", 200}, {"sensors", {18, 19, 30, 31}}, {"ukf", {{"R_sd", 0.05}}}});
  EXPECT_EQ(c.burgers.Nt, 200);
  EXPECT_EQ(c.burgers.Nx, 50);
  EXPECT_EQ(c.sensors.indices, burgers::SensorLayout::case2().indices);
  EXPECT_EQ(c.ukf.R_sd, 0.05);
  EXPECT_EQ(c.ukf.alpha, 1e-3);
}

TEST(Config, EveryViolationReportedAtOnce) {
  const json j = {{"Nx", 2}, {"kappa", -1.0}, {"bogus", 1}, {"ukf", {{"R_sd", 0.0}}}, {"gramian", {{"delta", 0.0}}}};
  try {
    experiment::from_json(j);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    const std::string msg = e.what();
    for (const char* needle : {"bogus", "Nx", "kappa", "R_sd", "delta"})
      EXPECT_NE(msg.find(needle), std::string::npos) << needle << " missing from: " << msg;
  }
  EXPECT_THROW(experiment::from_json(json{{"Nt", "many"}}), InvalidInput);
}
