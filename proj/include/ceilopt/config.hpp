#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ceilopt/bench.hpp"
#include "ceilopt/fem/helmholtz.hpp"
#include "ceilopt/pipeline.hpp"
#include "ceilopt/transfer.hpp"

namespace ceilopt {

/// Everything a run needs. Defaults reproduce the paper's setup.
struct Config {
  ProblemSetup setup;
  RunConfig run;
  AnsatzKind ansatz = AnsatzKind::linear;
  std::string output_dir = "out";

  int dataset_samples = 4;
  double dataset_f_min = 10.0;
  double dataset_f_max = 100.0;
  std::uint64_t dataset_seed = 0;
  std::string dataset_path;
  std::string checkpoint;  // comma separated list
  PretrainConfig pretrain;
  int study_runs = 30;
  std::uint64_t restart_seed = 0;

  std::string landscape = "rosenbrock";
  bench::BenchConfig bench;
  int bench_guesses = 200;
  double bench_x0 = 3.0;
  double bench_y0 = 3.0;
  int bench_instances = 20;

  SweepConfig sweep;

  void validate() const;
};

// `key = value` lines, `#` comments. Unknown keys, malformed lines and bad
// values raise ConfigError naming the line.
Config parse_config(const std::filesystem::path& path);
Config parse_config_text(const std::string& text, const std::string& source = "<config>");
// Applies one `key=value` override on top of an existing configuration.
void apply_override(Config& config, const std::string& assignment);
// Every key with its current value; parses back to an identical Config.
std::string to_text(const Config& config);
std::vector<std::string> config_keys();

}  // namespace ceilopt
