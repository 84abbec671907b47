// Command-line entry point: every experiment as a subcommand writing CSV/JSON
// artifacts and a run manifest under --out.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "tobs/burgers.hpp"
#include "tobs/deep_filter.hpp"
#include "tobs/experiment.hpp"
#include "tobs/io.hpp"
#include "tobs/observability.hpp"
#include "tobs/parallel.hpp"
#include "tobs/ukf.hpp"

#ifndef TOBS_VERSION
#define TOBS_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tobs;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> target;
  std::optional<int> horizon;  // number of output times, K+1
  std::optional<long> samples;
  std::optional<double> noise_sd;
  std::optional<int> sensor_case;
};

void add_common(CLI::App* app, Common& c, bool with_case = true) {
  app->add_option("--config", c.config, "experiment JSON file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "global seed");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--target", c.target, "targeted state component (1-based grid index)");
  app->add_option("--horizon", c.horizon, "number of output times K+1")->check(CLI::Range(2, 100000));
  app->add_option("--samples", c.samples, "sample / trajectory count")->check(CLI::PositiveNumber);
  app->add_option("--noise-sd", c.noise_sd, "sensor noise standard deviation")->check(CLI::NonNegativeNumber);
  if (with_case) app->add_option("--case", c.sensor_case, "sensor layout case")->check(CLI::IsMember({1, 2}));
}

experiment::Config resolve(const Common& c) {
  experiment::Config cfg = c.config.empty() ? experiment::Config{} : experiment::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.target) {
    cfg.gramian.target = *c.target;
    cfg.datagen.target = *c.target;
  }
  if (c.horizon) {
    cfg.gramian.K = *c.horizon - 1;
    cfg.datagen.K = *c.horizon - 1;
  }
  if (c.noise_sd) cfg.noise_sd = *c.noise_sd;
  if (c.sensor_case) cfg.sensors = *c.sensor_case == 1 ? burgers::SensorLayout::case1() : burgers::SensorLayout::case2();
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Common& c, const std::string& name) {
  return c.out.empty() ? fs::path("runs") / name : fs::path(c.out);
}

io::ExperimentManifest start_manifest(const std::string& command, const experiment::Config& cfg) {
  io::ExperimentManifest m;
  m.command = command;
  m.code_version = TOBS_VERSION;
  m.created_utc = io::utc_timestamp();
  m.config = experiment::to_json(cfg);
  m.seeds = {{"global", cfg.seed}};
  m.results = json::object();
  return m;
}

void write_artifact(io::ExperimentManifest& m, const fs::path& root, const fs::path& rel, const std::string& bytes) {
  io::write_atomic(root / rel, bytes);
  m.add_artifact(root, rel);
}

void finish(const io::ExperimentManifest& m, const fs::path& root) {
  io::save(root / "manifest.json", m);
  std::cout << json{{"out", root.string()}, {"results", m.results}}.dump() << "\n";
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 1; i < argc; ++i) s += (i > 1 ? " " : "") + std::string(argv[i]);
  return s;
}

std::string to_csv(const Trajectory& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}
std::string to_csv(const OutputSequence& s) {
  std::ostringstream os;
  write_csv(os, s);
  return os.str();
}

json number(double v) {
  if (std::isinf(v)) return "inf";
  if (std::isnan(v)) return "nan";
  return v;
}

// --- subcommands -----------------------------------------------------------

void cmd_simulate(const Common& c, const std::string& init, const std::string& command) {
  auto cfg = resolve(c);
  const auto model = burgers::make_system(cfg.burgers, cfg.sensors);
  const std::uint64_t s = experiment::stream_seed(cfg.seed, experiment::stream::kSimulate);
  const Vector u0 = init == "zero" ? Vector::Zero(model.n) : experiment::sample_initial(cfg, s);
  const auto traj = propagate(model, u0, cfg.burgers.Nt);
  const double sd = c.noise_sd.value_or(0.0);
  const auto ys = observe_trajectory(model, traj, sd, experiment::stream_seed(cfg.seed, experiment::stream::kMeasurementNoise));
  const fs::path root = out_dir(c, "simulate");
  auto m = start_manifest(command, cfg);
  m.seeds["initial_state"] = s;
  write_artifact(m, root, "csv/trajectory.csv", to_csv(traj));
  write_artifact(m, root, "csv/outputs.csv", to_csv(ys));
  m.results = {{"init", init}, {"steps", cfg.burgers.Nt}, {"noise_sd", sd}};
  finish(m, root);
}

void cmd_index(const Common& c, const std::string& command) {
  auto cfg = resolve(c);
  const std::uint64_t s = experiment::stream_seed(cfg.seed, experiment::stream::kSurvey);
  const auto r = experiment::index_at(cfg, s);
  const fs::path root = out_dir(c, "index");
  auto m = start_manifest(command, cfg);
  m.seeds["initial_state"] = s;
  io::save(root / "report.json", r.report);
  m.add_artifact(root, "report.json");
  const double bound = observability::worst_case_error_bound(r.report.index, cfg.noise_sd, static_cast<int>(cfg.sensors.indices.size()), cfg.gramian.K);
  m.results = {{"target", cfg.gramian.target}, {"horizon", cfg.gramian.K + 1}, {"index", number(r.report.index)},
               {"min_eig_G", r.report.min_eig_G}, {"worst_case_error", number(bound)}};
  finish(m, root);
}

void survey(const experiment::Config& cfg, long count, io::ExperimentManifest& m, const fs::path& root,
            const fs::path& csv) {
  const auto model = burgers::make_system(cfg.burgers, cfg.sensors);
  const std::uint64_t s = experiment::stream_seed(cfg.seed, experiment::stream::kSurvey);
  const auto sampler = [&cfg](std::uint64_t seed) { return experiment::sample_initial(cfg, seed); };
  const auto rows = observability::gramian_survey(model, sampler, count, cfg.gramian, s);
  std::ostringstream os;
  observability::write_survey_csv(os, rows);
  write_artifact(m, root, csv, os.str());
  const auto sum = observability::summarize(rows);
  m.seeds["survey"] = s;
  m.results = {{"samples", sum.samples},
               {"failed", sum.failed},
               {"unobservable", sum.unobservable},
               {"mean_index", number(sum.mean_index)},
               {"median_index", number(sum.median_index)}};
}

void cmd_observability(const Common& c, const std::string& command) {
  auto cfg = resolve(c);
  const fs::path root = out_dir(c, "observability");
  auto m = start_manifest(command, cfg);
  survey(cfg, c.samples.value_or(5000), m, root, "csv/survey.csv");
  finish(m, root);
}

void ukf_outputs(const experiment::Config& cfg, std::uint64_t seed, int target, io::ExperimentManifest& m,
                 const fs::path& root, const std::string& stem) {
  const auto e = experiment::run_ukf(cfg, seed);
  std::ostringstream os;
  ukf::write_target_csv(os, e.run, e.truth, target);
  write_artifact(m, root, "csv/" + stem + ".csv", os.str());
  const auto err = ukf::error_series(e.run, e.truth, target);
  const double e0 = ukf::initial_error(e.run, e.truth, target);
  json r = {{"target", target}, {"initial_error", e0}, {"final_error", err.back()}};
  if (err.size() > 20) r["error_ratio_k20"] = number(err[20] / e0);
  m.results[stem] = r;
}

void cmd_ukf(const Common& c, std::optional<int> steps, const std::string& command) {
  auto cfg = resolve(c);
  if (steps) {
    const double dt = cfg.burgers.dt();
    cfg.burgers.Nt = *steps;
    cfg.burgers.T = dt * *steps;
  }
  cfg.validate();
  const fs::path root = out_dir(c, "ukf");
  auto m = start_manifest(command, cfg);
  const int target = c.target.value_or(25);
  m.seeds["ukf"] = cfg.seed;
  ukf_outputs(cfg, cfg.seed, target, m, root, "ukf_u" + std::to_string(target));
  finish(m, root);
}

void cmd_datagen(const Common& c, const std::string& role, bool csv, const std::string& command) {
  auto cfg = resolve(c);
  const bool validation = role == "validation";
  const std::uint64_t s = experiment::stream_seed(cfg.seed, validation ? experiment::stream::kValidationData
                                                                        : experiment::stream::kTrainData);
  const long count = c.samples.value_or(validation ? cfg.validation_trajectories : cfg.train_trajectories);
  const double sd = c.noise_sd.value_or(0.0);
  const auto d = deep::build_dataset(cfg.burgers, cfg.sensors, cfg.datagen, count, sd, s,
                                     validation ? deep::Role::Validation : deep::Role::Training);
  const fs::path root = out_dir(c, "datagen");
  auto m = start_manifest(command, cfg);
  m.seeds["dataset"] = s;
  io::save(root / "datasets" / (role + ".bin"), d);
  m.add_artifact(root, fs::path("datasets") / (role + ".bin"));
  if (csv) write_artifact(m, root, "csv/" + role + ".csv", io::dataset_csv(d));
  m.results = {{"samples", d.size()}, {"dim", d.dim()}, {"noise_sd", sd}, {"role", role}};
  finish(m, root);
}

void cmd_train(const Common& c, const std::string& dataset, const std::string& command) {
  auto cfg = resolve(c);
  const fs::path root = out_dir(c, "train");
  auto m = start_manifest(command, cfg);
  deep::Dataset d;
  if (!dataset.empty()) {
    d = io::load_dataset(dataset);
    m.results["dataset"] = dataset;
  } else {
    const std::uint64_t s = experiment::stream_seed(cfg.seed, experiment::stream::kTrainData);
    d = deep::build_dataset(cfg.burgers, cfg.sensors, cfg.datagen, c.samples.value_or(cfg.train_trajectories),
                            c.noise_sd.value_or(0.0), s);
    m.seeds["dataset"] = s;
  }
  auto tc = cfg.train;
  tc.init_seed = experiment::stream_seed(cfg.seed, experiment::stream::kInit) ^ cfg.train.init_seed;
  m.seeds["init"] = tc.init_seed;
  const auto res = deep::train_from_scratch(d, tc, [](int it, double f, const Vector&) {
    if (it % 100 == 0) std::cerr << "iteration " << it << " loss " << f << "\n";
    return true;
  });
  io::save(root / "models" / "model.bin", res.net);
  m.add_artifact(root, "models/model.bin");
  std::ostringstream os;
  os.precision(17);
  os << "iteration,loss\n";
  for (std::size_t i = 0; i < res.loss_history.size(); ++i) os << i << ',' << res.loss_history[i] << '\n';
  write_artifact(m, root, "csv/loss_history.csv", os.str());
  m.results["status"] = optim::to_string(res.status);
  m.results["iterations"] = res.iterations;
  m.results["warning"] = res.warning;
  m.results["train_rmse"] = deep::evaluate_rmse(res.net, d);
  finish(m, root);
}

void cmd_evaluate(const std::string& model, const std::string& dataset) {
  const auto net = io::load_mlp(model);
  const auto d = io::load_dataset(dataset);
  std::cout << json{{"rmse", deep::evaluate_rmse(net, d)}, {"samples", d.size()}}.dump() << "\n";
}

void cmd_predict(const std::string& model, const std::string& window) {
  const auto net = io::load_mlp(model);
  std::ifstream is(window);
  if (!is) throw InvalidInput("cannot open window file " + window);
  const auto seq = read_outputs_csv(is);
  const int p = net.input_dim();
  require(seq.dim() > 0 && static_cast<int>(seq.outputs.size()) * seq.dim() == p,
          "window has " + std::to_string(seq.outputs.size()) + "x" + std::to_string(seq.dim()) +
              " values, model expects " + std::to_string(p));
  Vector z(p);
  for (std::size_t k = 0; k < seq.outputs.size(); ++k) z.segment(static_cast<Eigen::Index>(k) * seq.dim(), seq.dim()) = seq.outputs[k];
  std::cout << json{{"estimate", deep::forward(net, z)}}.dump() << "\n";
}

void cmd_reproduce(const Common& c, const std::string& what, const std::string& model_path, const std::string& command) {
  auto cfg = resolve(c);
  const fs::path root = out_dir(c, what);
  auto m = start_manifest(command, cfg);
  if (what == "fig1") {
    cfg.sensors = burgers::SensorLayout::case1();
    cfg.gramian.K = c.horizon ? *c.horizon - 1 : 9;
    survey(cfg, c.samples.value_or(5000), m, root, "csv/fig1_min_eig.csv");
  } else if (what == "fig2" || what == "fig3-4") {
    cfg.sensors = burgers::SensorLayout::case1();
    const int target = what == "fig2" ? 12 : 25;
    ukf_outputs(cfg, cfg.seed, target, m, root, what == "fig2" ? "fig2_u12" : "fig3_4_u25");
  } else if (what == "fig5" || what == "fig6") {
    const int sc = what == "fig5" ? 1 : 2;
    const auto layout = sc == 1 ? burgers::SensorLayout::case1() : burgers::SensorLayout::case2();
    deep::Mlp net;
    if (!model_path.empty()) {
      net = io::load_mlp(model_path);
    } else {
      experiment::Config one = cfg;
      one.sensors = layout;
      one.index_samples = 1;
      experiment::CaseArtifacts a;
      experiment::table1_case(one, sc, &a, [](const std::string& s) { std::cerr << s << "\n"; });
      net = one.table1_mode == experiment::Table1Mode::Separate ? a.noisy.net : a.clean.net;
      io::save(root / "models" / (what + ".bin"), net);
      m.add_artifact(root, "models/" + what + ".bin");
    }
    const std::uint64_t s = experiment::stream_seed(cfg.seed, experiment::stream::kFigure);
    m.seeds["trajectory"] = s;
    write_artifact(m, root, "csv/" + what + "_u" + std::to_string(cfg.datagen.target) + ".csv",
                   experiment::filter_trajectory_csv(cfg, layout, net, cfg.noise_sd, s));
    m.results = {{"case", sc}, {"noise_sd", cfg.noise_sd}};
  } else if (what == "table1") {
    std::vector<experiment::CaseArtifacts> arts;
    const auto rows = experiment::table1(cfg, &arts, [](const std::string& s) { std::cerr << s << "\n"; });
    write_artifact(m, root, "csv/table1.csv", experiment::table1_csv(rows));
    for (std::size_t i = 0; i < arts.size(); ++i) {
      const std::string stem = "models/case" + std::to_string(i + 1);
      io::save(root / (stem + "_clean.bin"), arts[i].clean.net);
      m.add_artifact(root, stem + "_clean.bin");
      if (cfg.table1_mode == experiment::Table1Mode::Separate) {
        io::save(root / (stem + "_noisy.bin"), arts[i].noisy.net);
        m.add_artifact(root, stem + "_noisy.bin");
      }
    }
    json rj = json::array();
    for (const auto& r : rows)
      rj.push_back({{"case", r.sensor_case}, {"index_avg", number(r.index_avg)}, {"regime", r.regime},
                    {"rmse", r.rmse}, {"trained_on", r.trained_on}});
    m.results = {{"table1", rj}};
    m.seeds["train_data"] = experiment::stream_seed(cfg.seed, experiment::stream::kTrainData);
    m.seeds["validation_data"] = experiment::stream_seed(cfg.seed, experiment::stream::kValidationData);
  } else {
    throw InvalidInput("unknown reproduce target '" + what + "'");
  }
  finish(m, root);
}

void print_error(const std::string& kind, const std::string& what) {
  json j = {{"error", kind}, {"message", what}};
  // Config errors are "prefix; violation; violation ..." - expose them as a list.
  json list = json::array();
  std::size_t pos = what.find("; ");
  while (pos != std::string::npos) {
    const std::size_t next = what.find("; ", pos + 2);
    list.push_back(what.substr(pos + 2, next == std::string::npos ? std::string::npos : next - pos - 2));
    pos = next;
  }
  if (!list.empty()) j["violations"] = list;
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Targeted-state observability and estimation toolkit"};
  app.require_subcommand(1);
  const std::string command = join_args(argc, argv);

  Common common;
  std::string init = "fourier", role = "training", dataset, model, window, what;
  bool csv = false;
  std::optional<int> steps;

  auto* simulate = app.add_subcommand("simulate", "propagate one Burgers trajectory");
  add_common(simulate, common);
  simulate->add_option("--init", init, "initial state")->check(CLI::IsMember({"zero", "fourier"}));

  auto* obs = app.add_subcommand("observability", "Gramian eigenvalue / index survey over sampled states");
  add_common(obs, common);

  auto* index = app.add_subcommand("index", "unobservability index on one sampled trajectory");
  add_common(index, common);

  auto* ukfc = app.add_subcommand("ukf", "unscented Kalman filter run");
  add_common(ukfc, common);
  ukfc->add_option("--steps", steps, "time steps (overrides Nt, keeping dt)")->check(CLI::PositiveNumber);

  auto* datagen = app.add_subcommand("datagen", "build a deep-filter dataset");
  add_common(datagen, common);
  datagen->add_option("--role", role)->check(CLI::IsMember({"training", "validation"}));
  datagen->add_flag("--csv", csv, "also export CSV");

  auto* train = app.add_subcommand("train", "train a deep filter");
  add_common(train, common);
  train->add_option("--dataset", dataset, "dataset file (generated when omitted)")->check(CLI::ExistingFile);

  auto* evaluate = app.add_subcommand("evaluate", "RMSE of a model on a dataset");
  evaluate->add_option("--model", model)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);

  auto* predict = app.add_subcommand("predict", "estimate from one output window CSV");
  predict->add_option("--model", model)->required()->check(CLI::ExistingFile);
  predict->add_option("--window", window, "CSV with header k,y_1..y_m and K+1 rows")->required()->check(CLI::ExistingFile);

  auto* reproduce = app.add_subcommand("reproduce", "regenerate a figure or table");
  add_common(reproduce, common);
  reproduce->add_option("what", what)->required()->check(CLI::IsMember({"fig1", "fig2", "fig3-4", "fig5", "fig6", "table1"}));
  reproduce->add_option("--model", model, "reuse a trained model (fig5/fig6)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (simulate->parsed()) cmd_simulate(common, init, command);
    else if (obs->parsed()) cmd_observability(common, command);
    else if (index->parsed()) cmd_index(common, command);
    else if (ukfc->parsed()) cmd_ukf(common, steps, command);
    else if (datagen->parsed()) cmd_datagen(common, role, csv, command);
    else if (train->parsed()) cmd_train(common, dataset, command);
    else if (evaluate->parsed()) cmd_evaluate(model, dataset);
    else if (predict->parsed()) cmd_predict(model, window);
    else if (reproduce->parsed()) cmd_reproduce(common, what, model, command);
  } catch (const InvalidInput& e) {
    print_error("invalid_input", e.what());
    return 3;
  } catch (const LoadError& e) {
    print_error("load_error", e.what());
    return 4;
  } catch (const NumericalError& e) {
    print_error("numerical_error", e.what());
    return 5;
  } catch (const std::exception& e) {
    print_error("failure", e.what());
    return 1;
  }
  return 0;
}
