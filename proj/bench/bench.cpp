#include <benchmark/benchmark.h>

#include "tobs/burgers.hpp"
#include "tobs/dataset.hpp"
#include "tobs/deep_filter.hpp"
#include "tobs/observability.hpp"
#include "tobs/parallel.hpp"

using namespace tobs;

namespace {

const burgers::Config kBurgers;

const SystemModel& case1() {
  static const auto model = burgers::make_system(kBurgers, burgers::SensorLayout::case1());
  return model;
}

observability::GramianConfig gramian() {
  observability::GramianConfig g;
  g.K = 9;
  g.target = 25;
  return g;
}

struct Training {
  deep::Dataset data;
  deep::Mlp net;
};

const Training& training() {
  static const Training t = [] {
    Training out;
    out.data = deep::build_dataset(kBurgers, burgers::SensorLayout::case1(), {}, 100, 0.0, 5);
    deep::TrainConfig tc;
    out.net = deep::make_mlp(tc.arch, 1);
    deep::fit_normalization(out.net, out.data, tc);
    return out;
  }();
  return t;
}

const observability::Sampler kSampler = [](std::uint64_t s) {
  return burgers::sample_fourier_initial(kBurgers, 3, 0.3, s);
};

}  // namespace

static void BM_GramianSerial(benchmark::State& st) {
  const Vector u0 = burgers::sample_fourier_initial(kBurgers, 3, 0.3, 1);
  for (auto _ : st) benchmark::DoNotOptimize(observability::reference::empirical_pair(case1(), u0, gramian()));
}
BENCHMARK(BM_GramianSerial)->Unit(benchmark::kMillisecond);

static void BM_GramianParallel(benchmark::State& st) {
  const Vector u0 = burgers::sample_fourier_initial(kBurgers, 3, 0.3, 1);
  for (auto _ : st) benchmark::DoNotOptimize(observability::empirical_pair(case1(), u0, gramian()));
}
BENCHMARK(BM_GramianParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_SurveySerial(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(observability::reference::gramian_survey(case1(), kSampler, st.range(0), gramian(), 1));
}
BENCHMARK(BM_SurveySerial)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_SurveyParallel(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(observability::gramian_survey(case1(), kSampler, st.range(0), gramian(), 1));
}
BENCHMARK(BM_SurveyParallel)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_LossGradientSerial(benchmark::State& st) {
  const auto& t = training();
  for (auto _ : st) benchmark::DoNotOptimize(deep::reference::loss_and_gradient(t.net, t.data));
  st.SetItemsProcessed(st.iterations() * t.data.size());
}
BENCHMARK(BM_LossGradientSerial)->Unit(benchmark::kMillisecond);

static void BM_LossGradientParallel(benchmark::State& st) {
  const auto& t = training();
  set_worker_count(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(deep::loss_and_gradient(t.net, t.data));
  set_worker_count(0);
  st.SetItemsProcessed(st.iterations() * t.data.size());
}
BENCHMARK(BM_LossGradientParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(0)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
