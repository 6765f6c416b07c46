#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crosatfl/policy.hpp"

namespace crosatfl::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalidInput = 1,
  kInfeasible = 2,
  kDiverged = 3,
  kRuntimeFailure = 4,
};

struct SimulateOptions {
  std::string scenario;
  std::string method = "crosatfl";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

struct ClusterOptions {
  std::string profiles;
  std::string policy = "greedy";  // or trained:<path>
  std::string out;
  std::optional<std::uint64_t> seed;
  // When > 0 with a trained policy, also scores policy against greedy on
  // this many fresh instances of the document's family.
  std::size_t paired = 0;
};

struct TrainOptions {
  std::string instances;
  std::string out;
  std::optional<std::string> trace;  // defaults to <out>.trace.csv
  starmask::TrainHyper hyper;
  std::optional<std::uint64_t> seed;
};

struct CompareOptions {
  std::string scenario;
  std::vector<std::string> methods{"crosatfl", "fedsyn"};
  std::string out = "compare";
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateOptions& options);
int cmd_cluster(const ClusterOptions& options);
int cmd_train_policy(const TrainOptions& options);
int cmd_compare(const CompareOptions& options);

}  // namespace crosatfl::cli
