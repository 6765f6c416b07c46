#include <benchmark/benchmark.h>

#include "crosatfl/aggregation.hpp"
#include "crosatfl/engine.hpp"
#include "crosatfl/orbits.hpp"
#include "crosatfl/rng.hpp"
#include "crosatfl/skipone.hpp"
#include "crosatfl/starmask.hpp"

using namespace crosatfl;

static void BM_Propagate(benchmark::State& state) {
  const orbits::ConstellationConfig cfg;
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(orbits::propagate(cfg, t));
    t += 17.0;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.size()));
}
BENCHMARK(BM_Propagate);

static void BM_Contacts(benchmark::State& state) {
  const orbits::ConstellationConfig cfg;
  const orbits::GroundStationSpec gs;
  const auto pos = orbits::propagate(cfg, 1234.0);
  const double range = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(orbits::contacts(pos, gs, range, 1234.0));
}
BENCHMARK(BM_Contacts)->Arg(659)->Arg(1319)->Arg(1700)->Unit(benchmark::kMillisecond);

static void BM_NextGsWindow(benchmark::State& state) {
  const orbits::ConstellationConfig cfg;
  const orbits::GroundStationSpec gs;
  std::size_t sat = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(orbits::next_gs_visibility(cfg, gs, sat, 0.0, 30.0 * 86400.0));
    sat = (sat + 37) % cfg.size();
  }
}
BENCHMARK(BM_NextGsWindow)->Unit(benchmark::kMicrosecond);

static void BM_GreedyFallback(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto inst = starmask::make_instance(compute::sample_profiles(n, 0.5, 3), 10);
  starmask::Constraints c;
  c.k_max = std::max<std::size_t>(9, n / 4);
  for (auto _ : state) benchmark::DoNotOptimize(starmask::greedy_fallback(inst, c));
}
BENCHMARK(BM_GreedyFallback)->Arg(12)->Arg(40)->Arg(200);

static void BM_PolicyEpisode(benchmark::State& state) {
  const auto inst = starmask::make_instance(compute::sample_profiles(40, 0.5, 5), 10);
  starmask::Constraints c;
  const starmask::MaskedPolicy policy({c.k_max, 8, 16}, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        starmask::run_clustering_episode(inst, policy, c, starmask::EpisodeMode::Greedy, nullptr));
  }
}
BENCHMARK(BM_PolicyEpisode)->Unit(benchmark::kMicrosecond);

static void BM_SkipOneSelect(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<std::size_t> members(n);
  std::vector<compute::TrainingCost> costs(n);
  std::vector<compute::Hardware> hw(n, compute::Hardware::CPU);
  for (std::size_t i = 0; i < n; ++i) {
    members[i] = i;
    costs[i].t_train_s = rng.uniform(0.1, 10.0);
    costs[i].e_train_j = rng.uniform(0.1, 3.0);
  }
  const auto f = skipone::FairnessState::initial(n);
  for (auto _ : state) benchmark::DoNotOptimize(skipone::select_participants(members, costs, hw, f, {}, 1));
}
BENCHMARK(BM_SkipOneSelect)->Arg(5)->Arg(11);

static void BM_CrossAggregate(benchmark::State& state) {
  const std::size_t k = 9;
  const auto dim = static_cast<std::size_t>(state.range(0));
  std::vector<aggregation::ClusterModel> models;
  std::vector<std::vector<std::size_t>> reach(k);
  for (std::size_t i = 0; i < k; ++i) {
    models.push_back({i, aggregation::ModelVector(std::vector<double>(dim, double(i))), 100.0 + i});
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j) reach[i].push_back(j);
    }
  }
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(aggregation::cross_aggregate_round(models, reach, 4, r++));
}
BENCHMARK(BM_CrossAggregate)->Arg(11)->Arg(1 << 16);

static void BM_Session(benchmark::State& state) {
  const auto method = static_cast<engine::Method>(state.range(0));
  engine::SessionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(engine::run(method, cfg));
  state.SetLabel(std::string(engine::to_string(method)));
}
BENCHMARK(BM_Session)
    ->Arg(static_cast<int>(engine::Method::CroSatFL))
    ->Arg(static_cast<int>(engine::Method::FedSyn))
    ->Unit(benchmark::kMillisecond)
    ->Iterations(3);

BENCHMARK_MAIN();
