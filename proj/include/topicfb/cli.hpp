// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "topicfb/data_model.hpp"
#include "topicfb/io.hpp"
#include "topicfb/model.hpp"
#include "topicfb/objective.hpp"

namespace topicfb {

/// Everything that determines the contents of a run's artifacts. Output
/// paths and the thread count are deliberately absent: neither changes the
/// results.
struct RunConfig {
  std::string command;
  std::optional<std::string> posts;
  std::optional<std::string> feedback;
  IngestOptions ingest;
  FeatureConfig features = FeatureConfig::Full();
  Hyperparams hyper;
  int bootstrap = 200;
  int holdout = 3;
  std::uint64_t seed = 0;
  double level = 0.99;        // susceptibility and metric intervals
  double trend_level = 0.95;  // trend significance
  int min_run = 3;
  double q_hi = 0.99;  // intervention user-percentiles
  double q_lo = 0.5;
  bool ablation = false;
  bool grid = false;
  std::vector<double> beta_u_grid = default_beta_u_grid();
  std::vector<double> beta_g_grid = default_beta_g_grid();
  std::string preset = "paper-c1";
  std::optional<int> synth_users;
};

Json to_json(const RunConfig& config);
/// Overrides the fields of `base` present in `doc`; unknown keys and
/// ill-typed values raise UsageError.
RunConfig run_config_from_json(const Json& doc, RunConfig base = {});

/// Runs one command line (without the program name). Results go to `out`,
/// errors to `err` as a JSON object. Returns the exit status: 0 success,
/// 2 usage error, 3 data error, 4 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace topicfb
