#include "tobs/experiment.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "tobs/io.hpp"
#include "tobs/parallel.hpp"
#include "tobs/rng.hpp"

namespace tobs::experiment {

using nlohmann::json;

std::vector<std::string> Config::violations() const {
  std::vector<std::string> v = burgers.violations();
  for (auto& s : sensors.violations(burgers)) v.push_back(std::move(s));
  // With an invalid grid the target range is unknown; the other checks still apply.
  const int n = burgers.Nx >= 3 ? burgers.state_dim() : std::numeric_limits<int>::max();
  for (auto& s : gramian.violations(n)) v.push_back("gramian: " + s);
  for (auto& s : ukf.violations()) v.push_back("ukf: " + s);
  if (!(ukf_offset_sigma > 0.0)) v.emplace_back("ukf_offset_sigma must be > 0");
  if (datagen.K < 1) v.emplace_back("datagen: K must be >= 1");
  if (datagen.K + 1 > burgers.Nt) v.emplace_back("datagen: window length K+1 exceeds Nt");
  if (datagen.target < 1 || datagen.target > burgers.state_dim())
    v.emplace_back("datagen: target out of range");
  if (datagen.NF < 1) v.emplace_back("datagen: NF must be >= 1");
  if (!(datagen.sigma > 0.0)) v.emplace_back("datagen: sigma must be > 0");
  if (train_trajectories < 1) v.emplace_back("train_trajectories must be >= 1");
  if (validation_trajectories < 1) v.emplace_back("validation_trajectories must be >= 1");
  if (!(noise_sd >= 0.0)) v.emplace_back("noise_sd must be >= 0");
  if (index_samples < 0) v.emplace_back("index_samples must be >= 0");
  try {
    train.validate();
  } catch (const InvalidInput& e) {
    v.push_back(std::string("train: ") + e.what());
  }
  return v;
}

void Config::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid experiment config";
  for (const auto& s : v) msg += "; " + s;
  throw InvalidInput(msg);
}

json to_json(const Config& c) {
  json j;
  j["L"] = c.burgers.L;
  j["T"] = c.burgers.T;
  j["kappa"] = c.burgers.kappa;
  j["Nx"] = c.burgers.Nx;
  j["Nt"] = c.burgers.Nt;
  j["sensors"] = c.sensors.indices;
  j["gramian"] = {{"delta", c.gramian.delta},       {"K", c.gramian.K},
                  {"target", c.gramian.target},     {"rank_tol", c.gramian.rank_tol},
                  {"leak_tol", c.gramian.leak_tol}};
  j["ukf"] = {{"alpha", c.ukf.alpha},   {"beta", c.ukf.beta},         {"kappa_sigma", c.ukf.kappa_sigma},
              {"P0_scale", c.ukf.P0_scale}, {"Q_scale", c.ukf.Q_scale}, {"R_sd", c.ukf.R_sd},
              {"psd_tol", c.ukf.psd_tol},   {"offset_sigma", c.ukf_offset_sigma}};
  j["datagen"] = {{"K", c.datagen.K}, {"target", c.datagen.target}, {"NF", c.datagen.NF},
                  {"sigma", c.datagen.sigma}};
  const auto& o = c.train.optimizer;
  j["train"] = {{"memory", o.memory},
                {"max_iterations", o.max_iterations},
                {"grad_tol", o.grad_tol},
                {"c1", o.c1},
                {"c2", o.c2},
                {"max_line_search", o.max_line_search},
                {"init_seed", c.train.init_seed},
                {"hidden_layers", c.train.arch.hidden_layers},
                {"width", c.train.arch.width},
                {"activation", deep::to_string(c.train.arch.activation)},
                {"linear_output", c.train.arch.linear_output},
                {"standardize_inputs", c.train.standardize_inputs},
                {"fit_output_scale", c.train.fit_output_scale},
                {"output_margin", c.train.output_margin}};
  j["train_trajectories"] = c.train_trajectories;
  j["validation_trajectories"] = c.validation_trajectories;
  j["noise_sd"] = c.noise_sd;
  j["index_samples"] = c.index_samples;
  j["table1_mode"] = c.table1_mode == Table1Mode::Separate ? "separate" : "shared";
  j["seed"] = c.seed;
  return j;
}

namespace {

class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  template <typename T>
  void field(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      errors_.push_back(where + key + ": wrong type");
    }
  }

  void unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    if (!obj.is_object()) {
      errors_.push_back(where + " must be an object");
      return;
    }
    std::set<std::string> k(known.begin(), known.end());
    for (const auto& [key, _] : obj.items())
      if (!k.count(key)) errors_.push_back("unknown key '" + where + key + "'");
  }

 private:
  std::vector<std::string>& errors_;
};

}  // namespace

Config from_json(const json& j, const Config& base) {
  Config c = base;
  std::vector<std::string> errors;
  Reader r(errors);
  r.unknown(j, {"L", "T", "kappa", "Nx", "Nt", "sensors", "gramian", "ukf", "datagen", "train",
                "train_trajectories", "validation_trajectories", "noise_sd", "index_samples",
                "table1_mode", "seed"},
            "");
  if (!errors.empty() && !j.is_object()) throw InvalidInput("config must be a JSON object");
  r.field(j, "L", c.burgers.L, "");
  r.field(j, "T", c.burgers.T, "");
  r.field(j, "kappa", c.burgers.kappa, "");
  r.field(j, "Nx", c.burgers.Nx, "");
  r.field(j, "Nt", c.burgers.Nt, "");
  r.field(j, "sensors", c.sensors.indices, "");
  if (j.contains("gramian")) {
    const auto& g = j["gramian"];
    r.unknown(g, {"delta", "K", "target", "rank_tol", "leak_tol"}, "gramian.");
    if (g.is_object()) {
      r.field(g, "delta", c.gramian.delta, "gramian.");
      r.field(g, "K", c.gramian.K, "gramian.");
      r.field(g, "target", c.gramian.target, "gramian.");
      r.field(g, "rank_tol", c.gramian.rank_tol, "gramian.");
      r.field(g, "leak_tol", c.gramian.leak_tol, "gramian.");
    }
  }
  if (j.contains("ukf")) {
    const auto& u = j["ukf"];
    r.unknown(u, {"alpha", "beta", "kappa_sigma", "P0_scale", "Q_scale", "R_sd", "psd_tol", "offset_sigma"}, "ukf.");
    if (u.is_object()) {
      r.field(u, "alpha", c.ukf.alpha, "ukf.");
      r.field(u, "beta", c.ukf.beta, "ukf.");
      r.field(u, "kappa_sigma", c.ukf.kappa_sigma, "ukf.");
      r.field(u, "P0_scale", c.ukf.P0_scale, "ukf.");
      r.field(u, "Q_scale", c.ukf.Q_scale, "ukf.");
      r.field(u, "R_sd", c.ukf.R_sd, "ukf.");
      r.field(u, "psd_tol", c.ukf.psd_tol, "ukf.");
      r.field(u, "offset_sigma", c.ukf_offset_sigma, "ukf.");
    }
  }
  if (j.contains("datagen")) {
    const auto& d = j["datagen"];
    r.unknown(d, {"K", "target", "NF", "sigma"}, "datagen.");
    if (d.is_object()) {
      r.field(d, "K", c.datagen.K, "datagen.");
      r.field(d, "target", c.datagen.target, "datagen.");
      r.field(d, "NF", c.datagen.NF, "datagen.");
      r.field(d, "sigma", c.datagen.sigma, "datagen.");
    }
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    r.unknown(t, {"memory", "max_iterations", "grad_tol", "c1", "c2", "max_line_search", "init_seed",
                  "hidden_layers", "width", "activation", "linear_output", "standardize_inputs",
                  "fit_output_scale", "output_margin"},
              "train.");
    if (t.is_object()) {
      auto& o = c.train.optimizer;
      r.field(t, "memory", o.memory, "train.");
      r.field(t, "max_iterations", o.max_iterations, "train.");
      r.field(t, "grad_tol", o.grad_tol, "train.");
      r.field(t, "c1", o.c1, "train.");
      r.field(t, "c2", o.c2, "train.");
      r.field(t, "max_line_search", o.max_line_search, "train.");
      r.field(t, "init_seed", c.train.init_seed, "train.");
      r.field(t, "hidden_layers", c.train.arch.hidden_layers, "train.");
      r.field(t, "width", c.train.arch.width, "train.");
      std::string act = deep::to_string(c.train.arch.activation);
      r.field(t, "activation", act, "train.");
      try {
        c.train.arch.activation = deep::activation_from_string(act);
      } catch (const InvalidInput& e) {
        errors.push_back(std::string("train.activation: ") + e.what());
      }
      r.field(t, "linear_output", c.train.arch.linear_output, "train.");
      r.field(t, "standardize_inputs", c.train.standardize_inputs, "train.");
      r.field(t, "fit_output_scale", c.train.fit_output_scale, "train.");
      r.field(t, "output_margin", c.train.output_margin, "train.");
    }
  }
  r.field(j, "train_trajectories", c.train_trajectories, "");
  r.field(j, "validation_trajectories", c.validation_trajectories, "");
  r.field(j, "noise_sd", c.noise_sd, "");
  r.field(j, "index_samples", c.index_samples, "");
  std::string mode = c.table1_mode == Table1Mode::Separate ? "separate" : "shared";
  r.field(j, "table1_mode", mode, "");
  if (mode == "separate") c.table1_mode = Table1Mode::Separate;
  else if (mode == "shared") c.table1_mode = Table1Mode::Shared;
  else errors.push_back("table1_mode must be 'separate' or 'shared'");
  r.field(j, "seed", c.seed, "");

  for (auto& s : c.violations()) errors.push_back(std::move(s));
  if (!errors.empty()) {
    std::string msg = "invalid experiment config";
    for (const auto& s : errors) msg += "; " + s;
    throw InvalidInput(msg);
  }
  return c;
}

Config load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path + ": " + e.what());
  }
  return from_json(j);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) { return derive_seed(seed, stream); }

Vector sample_initial(const Config& c, std::uint64_t seed) {
  return burgers::sample_fourier_initial(c.burgers, c.datagen.NF, c.datagen.sigma, seed);
}

IndexResult index_at(const Config& c, std::uint64_t seed) {
  c.validate();
  const auto model = burgers::make_system(c.burgers, c.sensors);
  IndexResult r;
  r.x0 = sample_initial(c, seed);
  const auto pair = observability::empirical_pair(model, r.x0, c.gramian);
  r.report = observability::unobservability_index(pair, c.gramian);
  return r;
}

UkfExperiment run_ukf(const Config& c, std::uint64_t seed) {
  c.validate();
  const auto model = burgers::make_system(c.burgers, c.sensors);
  UkfExperiment e;
  const Vector u0 = sample_initial(c, stream_seed(seed, stream::kTruth));
  e.truth = propagate(model, u0, c.burgers.Nt);
  e.measurements = observe_trajectory(model, e.truth, c.ukf.R_sd, stream_seed(seed, stream::kMeasurementNoise));
  const Vector offset = burgers::sample_fourier_initial(c.burgers, c.datagen.NF, c.ukf_offset_sigma,
                                                        stream_seed(seed, stream::kOffset));
  ukf::UkfConfig uc = c.ukf;
  if (!(uc.P0_scale > 0.0)) uc.P0_scale = std::max(offset.squaredNorm() / static_cast<double>(offset.size()), 1e-12);
  e.run = ukf::ukf_run(model, e.measurements, uc, u0 + offset);
  return e;
}

observability::SurveySummary validation_index(const Config& c, const burgers::SensorLayout& layout,
                                              std::uint64_t validation_seed) {
  const auto model = burgers::make_system(c.burgers, layout);
  observability::GramianConfig gc = c.gramian;
  gc.K = c.datagen.K;
  gc.target = c.datagen.target;

  const long total = 3 * c.validation_trajectories;
  const long n = c.index_samples > 0 ? std::min(c.index_samples, total) : total;
  // Rebuild the initial window states u(s) of the first n validation samples.
  const auto windows = deep::build_dataset(c.burgers, layout, c.datagen,
                                           (n + 2) / 3, 0.0, validation_seed, deep::Role::Validation);
  std::vector<Vector> states(static_cast<std::size_t>(n));
  for (long t = 0; 3 * t < n; ++t) {
    const Trajectory traj = deep::dataset_trajectory(c.burgers, c.datagen, validation_seed, t);
    for (long w = 0; w < 3 && 3 * t + w < n; ++w) {
      const auto j = static_cast<std::size_t>(3 * t + w);
      states[j] = traj.states[static_cast<std::size_t>(windows.window_starts[j])];
    }
  }
  std::vector<observability::SurveyRow> rows(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long j = 0; j < n; ++j) {
    auto& row = rows[static_cast<std::size_t>(j)];
    row.sample_id = j;
    row.seed = validation_seed;
    try {
      const auto pair = observability::empirical_pair(model, states[static_cast<std::size_t>(j)], gc);
      const auto rep = observability::unobservability_index(pair, gc);
      row.index = rep.index;
      row.min_eig_G = rep.min_eig_G;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }
  return observability::summarize(rows);
}

namespace {

void say(const Progress& p, const std::string& msg) {
  if (p) p(msg);
}

burgers::SensorLayout layout_for(const Config& c, int sensor_case) {
  if (sensor_case == 1) return burgers::SensorLayout::case1();
  if (sensor_case == 2) return burgers::SensorLayout::case2();
  (void)c;
  throw InvalidInput("sensor case must be 1 or 2");
}

}  // namespace

std::vector<Table1Row> table1_case(const Config& c, int sensor_case, CaseArtifacts* artifacts,
                                   const Progress& progress) {
  c.validate();
  const auto layout = layout_for(c, sensor_case);
  const std::uint64_t train_seed = stream_seed(c.seed, stream::kTrainData);
  const std::uint64_t valid_seed = stream_seed(c.seed, stream::kValidationData);
  const std::string tag = "case " + std::to_string(sensor_case);

  CaseArtifacts local;
  CaseArtifacts& a = artifacts ? *artifacts : local;

  say(progress, tag + ": averaged index over validation windows");
  const auto idx = validation_index(c, layout, valid_seed);

  say(progress, tag + ": building datasets");
  a.train_clean = deep::build_dataset(c.burgers, layout, c.datagen, c.train_trajectories, 0.0, train_seed,
                                      deep::Role::Training);
  a.validation_clean = deep::build_dataset(c.burgers, layout, c.datagen, c.validation_trajectories, 0.0,
                                           valid_seed, deep::Role::Validation);
  a.validation_noisy = deep::build_dataset(c.burgers, layout, c.datagen, c.validation_trajectories,
                                           c.noise_sd, valid_seed, deep::Role::Validation);

  deep::TrainConfig tc = c.train;
  tc.init_seed = stream_seed(c.seed, stream::kInit) ^ c.train.init_seed;
  const auto monitor = [&](int it, double f, const Vector&) {
    if (it % 100 == 0) say(progress, tag + ": iteration " + std::to_string(it) + " loss " + std::to_string(f));
    return true;
  };

  say(progress, tag + ": training on clean windows");
  a.clean = deep::train_from_scratch(a.train_clean, tc, monitor);
  std::vector<Table1Row> rows;
  rows.push_back({sensor_case, idx.mean_index, "noise_free", deep::evaluate_rmse(a.clean.net, a.validation_clean), "clean"});

  if (c.table1_mode == Table1Mode::Separate) {
    a.train_noisy = deep::build_dataset(c.burgers, layout, c.datagen, c.train_trajectories, c.noise_sd,
                                        train_seed, deep::Role::Training);
    say(progress, tag + ": training on noisy windows");
    a.noisy = deep::train_from_scratch(a.train_noisy, tc, monitor);
    rows.push_back({sensor_case, idx.mean_index, "with_noise", deep::evaluate_rmse(a.noisy.net, a.validation_noisy), "noisy"});
  } else {
    rows.push_back({sensor_case, idx.mean_index, "with_noise", deep::evaluate_rmse(a.clean.net, a.validation_noisy), "clean"});
  }
  return rows;
}

std::vector<Table1Row> table1(const Config& c, std::vector<CaseArtifacts>* artifacts, const Progress& progress) {
  std::vector<Table1Row> rows;
  if (artifacts) artifacts->assign(2, {});
  for (int sc = 1; sc <= 2; ++sc) {
    auto r = table1_case(c, sc, artifacts ? &(*artifacts)[static_cast<std::size_t>(sc - 1)] : nullptr, progress);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

std::string table1_csv(const std::vector<Table1Row>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "case,index_avg,regime,rmse\n";
  for (const auto& r : rows) os << r.sensor_case << ',' << r.index_avg << ',' << r.regime << ',' << r.rmse << '\n';
  return os.str();
}

std::string filter_trajectory_csv(const Config& c, const burgers::SensorLayout& layout, const deep::Mlp& net,
                                  double noise_sd, std::uint64_t seed) {
  const auto model = burgers::make_system(c.burgers, layout);
  const int K = c.datagen.K;
  require(net.input_dim() == model.m * (K + 1), "filter_trajectory: network input does not match layout/window");
  const Vector u0 = sample_initial(c, stream_seed(seed, stream::kTruth));
  const Trajectory truth = propagate(model, u0, c.burgers.Nt);
  const OutputSequence ys = observe_trajectory(model, truth, noise_sd, stream_seed(seed, stream::kMeasurementNoise));
  std::ostringstream os;
  os.precision(17);
  os << "k,truth,estimate\n";
  Vector z(model.m * (K + 1));
  for (int k = K; k <= c.burgers.Nt; ++k) {
    for (int i = 0; i <= K; ++i) z.segment(i * model.m, model.m) = ys.outputs[static_cast<std::size_t>(k - K + i)];
    os << k << ',' << truth.states[static_cast<std::size_t>(k)][c.datagen.target - 1] << ',' << deep::forward(net, z)
       << '\n';
  }
  return os.str();
}

}  // namespace tobs::experiment
