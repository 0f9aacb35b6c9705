#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ceilopt/nn/networks.hpp"
#include "ceilopt/pipeline.hpp"

namespace ceilopt {

struct PretrainSample {
  std::vector<double> input;         // max-abs scaled dC/dzeta at zeta = 0
  std::vector<std::uint8_t> label;   // thresholded final design
  double frequency = 0.0;
};

struct Dataset {
  int height = 0;  // design image, x-major: height = nx, width = rows
  int width = 0;
  std::vector<PretrainSample> samples;

  void save(const std::filesystem::path& path) const;
  static Dataset load(const std::filesystem::path& path);
};

// Network input for one problem: the scaled initial sensitivity.
std::vector<double> network_input(const Problem& problem);

// For each uniformly drawn frequency in [f_min, f_max): tuned linear
// optimization, labelled with its thresholded final design. Failed runs are
// dropped with a warning on stderr.
Dataset generate_dataset(const ProblemSetup& setup, const RunConfig& config, int n_samples,
                         double f_min, double f_max, std::uint64_t seed);

struct PretrainConfig {
  int max_epochs = 2000;
  double alpha = 1e-3;
  // Stops when the loss drops below `target_loss`, or when it improved by
  // less than `plateau_tolerance` (relative) over `plateau_window` epochs.
  double target_loss = 1e-4;
  int plateau_window = 200;
  double plateau_tolerance = 1e-3;
};

struct PretrainResult {
  std::vector<double> loss;  // per epoch, mean MSE over the samples
  int epochs = 0;
};

// Full-batch Adam on the mean squared error. Batch-norm statistics are taken
// per sample, as during design optimization.
PretrainResult pretrain(nn::UNet& net, const Dataset& data, const PretrainConfig& config);

// Mean of min(z, 1 - z): zero for a 0/1 field, 0.5 for a uniform gray one.
double grayness(const std::vector<double>& field);

struct RestartRecord {
  RunRecord initial;  // linear phase
  PretrainResult fit;
  RunRecord final;    // network phase, beta restarted from 1
};
RestartRecord restart_scheme(const ProblemSetup& setup, const RunConfig& config,
                             std::uint64_t seed, const PretrainConfig& fit);

// Linear ansatz started from the prediction of a pretrained network; tuned
// over the networks and {alpha/2, alpha, 2 alpha}.
RunRecord nn_guess_for_linear(const Problem& problem, const std::vector<nn::UNet>& networks);

struct StudyResult {
  std::vector<double> levels;        // final L_p of each successful run
  std::vector<std::string> labels;   // guess or seed of each run
  int failures = 0;
};
// linear: n homogeneous guesses equally spaced in [0, 1]; nn: n networks
// pretrained on `data` with seeds 0..n-1, run at config.nn_alpha.
StudyResult statistical_study(const ProblemSetup& setup, const RunConfig& config,
                              AnsatzKind kind, int n_runs, const Dataset* data = nullptr,
                              const PretrainConfig& pretrain_config = {});

}  // namespace ceilopt
