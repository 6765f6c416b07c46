#include <iostream>
#include <string>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <spdlog/spdlog.h>

#include "crosatfl_cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace crosatfl::cli;

  CLI::App app{"crosatfl: on-orbit hierarchical federated learning simulator"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, critical or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  SimulateOptions sim;
  std::uint64_t sim_seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Run one session and write ledger, event log and metrics");
  simulate->add_option("scenario", sim.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--method", sim.method, "crosatfl, fedsyn or no-skip")
      ->check(CLI::IsMember({"crosatfl", "fedsyn", "no-skip"}));
  auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "Overrides the scenario seed");
  std::string sim_out;
  auto* sim_out_opt = simulate->add_option("--out-dir", sim_out, "Output directory (default: scenario output.dir)");

  ClusterOptions clu;
  std::uint64_t clu_seed = 0;
  auto* cluster = app.add_subcommand("cluster", "Partition a profile set into clusters");
  cluster->add_option("profiles", clu.profiles, "Profiles JSON")->required()->check(CLI::ExistingFile);
  cluster->add_option("--policy", clu.policy, "greedy or trained:<policy file>");
  cluster->add_option("--out", clu.out, "Partition JSON")->required();
  auto* clu_seed_opt = cluster->add_option("--seed", clu_seed, "Overrides the sampling seed");
  cluster->add_option("--paired", clu.paired, "Score a trained policy against greedy on N fresh instances");

  TrainOptions tr;
  std::uint64_t tr_seed = 0;
  std::string tr_trace;
  auto* train = app.add_subcommand("train-policy", "Train the masked clustering policy");
  train->add_option("instances", tr.instances, "Instance JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--out", tr.out, "Policy file")->required();
  auto* tr_trace_opt = train->add_option("--trace", tr_trace, "Reward trace CSV (default: <out>.trace.csv)");
  train->add_option("--episodes", tr.hyper.episodes, "Training episodes");
  train->add_option("--learning-rate", tr.hyper.learning_rate, "Adam step size")->check(CLI::PositiveNumber);
  train->add_option("--entropy-coef", tr.hyper.entropy_coef, "Entropy bonus weight")->check(CLI::NonNegativeNumber);
  train->add_option("--value-coef", tr.hyper.value_coef, "Critic loss weight")->check(CLI::NonNegativeNumber);
  train->add_option("--window", tr.hyper.moving_average_window, "Moving-average window")->check(CLI::PositiveNumber);
  auto* tr_seed_opt = train->add_option("--seed", tr_seed, "Training seed");

  CompareOptions cmp;
  std::uint64_t cmp_seed = 0;
  auto* compare = app.add_subcommand("compare", "Run several methods on one scenario and tabulate them");
  compare->add_option("scenario", cmp.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  compare->add_option("--methods", cmp.methods, "Comma-separated methods")
      ->delimiter(',')
      ->check(CLI::IsMember({"crosatfl", "fedsyn", "no-skip"}));
  compare->add_option("--out", cmp.out, "Output directory for comparison.json and comparison.csv");
  auto* cmp_seed_opt = compare->add_option("--seed", cmp_seed, "Overrides the scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalidInput;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%l] %v");

  if (*simulate) {
    if (*sim_seed_opt) sim.seed = sim_seed;
    if (*sim_out_opt) sim.out_dir = sim_out;
    return cmd_simulate(sim);
  }
  if (*cluster) {
    if (*clu_seed_opt) clu.seed = clu_seed;
    return cmd_cluster(clu);
  }
  if (*train) {
    if (*tr_seed_opt) tr.seed = tr_seed;
    if (*tr_trace_opt) tr.trace = tr_trace;
    return cmd_train_policy(tr);
  }
  if (*cmp_seed_opt) cmp.seed = cmp_seed;
  return cmd_compare(cmp);
}
