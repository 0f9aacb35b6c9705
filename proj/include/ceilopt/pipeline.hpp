#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ceilopt/fem/helmholtz.hpp"
#include "ceilopt/filter.hpp"
#include "ceilopt/geometry.hpp"
#include "ceilopt/nn/networks.hpp"
#include "ceilopt/optim.hpp"

namespace ceilopt {

enum class AnsatzKind { linear, nn };

struct RunConfig {
  int nx = 432;
  int ny = 216;
  Discretization stage1{2, 4};
  Discretization stage2{4, 4};
  Discretization evaluation{2, 1};
  int stage1_epochs = 280;
  // Counted stage-2 epochs including the first evaluation; 0 skips stage 2.
  int stage2_epochs = 101;
  double stage2_factor = 1.5;
  int stage2_check_interval = 10;
  bool stage2_reset_beta = false;
  double beta_cap1 = kStageOneBetaCap;
  double beta_cap2 = kStageTwoBetaCap;
  double filter_radius = 2.0 * 9.0 / 216.0;  // m
  double eta = 0.5;

  double linear_alpha = 0.1;
  double nn_alpha = 2e-5;
  double clip_norm = 1.0;
  double leaky_slope = 0.01;

  int tuning_epochs = 50;
  std::vector<double> linear_guesses{0.0, 0.5, 1.0};
  std::vector<double> nn_alphas{1e-5, 2e-5, 4e-5};
  std::vector<std::uint64_t> seeds{0, 1, 2};

  void validate() const;
};

/// Grid, filter and the three FEM models of one run configuration.
class Problem {
 public:
  Problem(const ProblemSetup& setup, const RunConfig& config);

  const ProblemSetup& setup() const { return grid_.setup(); }
  const RunConfig& config() const { return config_; }
  const VoxelGrid& grid() const { return grid_; }
  const DensityFilter& filter() const { return filter_; }
  const fem::HelmholtzModel& stage1() const { return *stage1_; }
  const fem::HelmholtzModel& stage2() const { return *stage2_; }
  const fem::HelmholtzModel& evaluation() const { return *evaluation_; }
  // Model for an arbitrary discretization (not cached).
  fem::HelmholtzModel model(Discretization disc) const { return {grid_, disc}; }

 private:
  RunConfig config_;
  VoxelGrid grid_;
  DensityFilter filter_;
  std::shared_ptr<fem::HelmholtzModel> stage1_, stage2_, evaluation_;
};

/// Design parametrization: produces the raw indicator field (before filter
/// and projection) and consumes its gradient.
class Ansatz {
 public:
  virtual ~Ansatz() = default;
  virtual AnsatzKind kind() const = 0;
  virtual std::vector<double> design() = 0;
  virtual void step(const std::vector<double>& gradient, double alpha) = 0;
};

class LinearAnsatz final : public Ansatz {
 public:
  explicit LinearAnsatz(std::vector<double> initial);
  LinearAnsatz(std::size_t size, double value) : LinearAnsatz(std::vector<double>(size, value)) {}

  AnsatzKind kind() const override { return AnsatzKind::linear; }
  std::vector<double> design() override { return zeta_; }
  // Adam step, then clamp to [0, 1].
  void step(const std::vector<double>& gradient, double alpha) override;

 private:
  std::vector<double> zeta_;
  Adam adam_;
};

class NNAnsatz final : public Ansatz {
 public:
  NNAnsatz(nn::UNet net, std::vector<double> input, double clip_norm);

  AnsatzKind kind() const override { return AnsatzKind::nn; }
  std::vector<double> design() override;
  // Backpropagates the design gradient, clips, Adam step.
  void step(const std::vector<double>& gradient, double alpha) override;
  const nn::UNet& network() const { return net_; }
  double last_gradient_norm() const { return last_norm_; }

 private:
  nn::UNet net_;
  std::vector<double> input_;
  double clip_norm_;
  Adam adam_;
  nn::Tensor output_;
  double last_norm_ = 0.0;
};

struct EpochRecord {
  int epoch = 0;  // global across stages
  int stage = 1;
  double cost = 0.0;
  double lp = 0.0;
  double beta = 1.0;
  double alpha = 0.0;
};

struct RunRecord {
  AnsatzKind ansatz = AnsatzKind::linear;
  std::vector<EpochRecord> history;
  int tuning_epochs = 0;
  int stage1_epochs = 0;
  int stage2_epochs = 0;
  double stage1_cost = 0.0;  // last recorded stage-1 cost
  // Thresholded designs evaluated on the stage-1, stage-2 and evaluation
  // discretizations.
  double lp_stage1 = 0.0;
  double lp_stage1_gray = 0.0;  // projected stage-1 design, stage-1 model
  double lp_stage2 = 0.0;
  double lp_final = 0.0;
  // Projected (not thresholded) final design on the evaluation discretization.
  double lp_final_gray = 0.0;
  std::vector<double> design_stage1;  // thresholded, design layout
  std::vector<double> design_final;
  std::vector<double> design_final_gray;
  double alpha = 0.0;
  double initial_guess = 0.0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  double thresholding_penalty() const { return lp_final - lp_final_gray; }
  double stage1_thresholding_penalty() const { return lp_stage1 - lp_stage1_gray; }
  int total_epochs() const { return tuning_epochs + stage1_epochs + stage2_epochs; }
};

// Runs stage 1, the stage-2 correction and the final evaluation.
RunRecord optimize(const Problem& problem, Ansatz& ansatz, double alpha);

// Runs only `epochs` stage-1 epochs and returns the last recorded cost.
double probe(const Problem& problem, Ansatz& ansatz, double alpha, int epochs);

struct LinearChoice {
  double guess = 0.0;
  std::vector<double> probe_costs;
  int epochs = 0;
};
LinearChoice tune_linear(const Problem& problem);
RunRecord optimize_linear(const Problem& problem);  // tuned guess + full run

struct NNChoice {
  std::size_t network = 0;
  double alpha = 0.0;
  std::vector<double> probe_costs;  // network-major
  int epochs = 0;
};
// The candidate networks are copied, never modified.
NNChoice tune_nn(const Problem& problem, const std::vector<nn::UNet>& networks,
                 const std::vector<double>& input);
RunRecord optimize_nn(const Problem& problem, const std::vector<nn::UNet>& networks,
                      const std::vector<double>& input);

// L_p of a design (design layout) with one forward solve.
double evaluate_design(const fem::HelmholtzModel& model, const std::vector<double>& design);
double unoptimized_level(const Problem& problem);

// dC/dzeta at zeta = 0 on the stage-1 discretization, and its max-abs scaling.
std::vector<double> initial_sensitivity(const Problem& problem);
std::vector<double> scale_max_abs(std::vector<double> field);

struct SweepRow {
  Discretization disc;
  double seconds = 0.0;
  double speedup = 0.0;        // baseline time / time
  double cost_increase = 0.0;  // C on the evaluation model / C on the training model
  double corrected_lp = 0.0;   // L_p on the evaluation model
};
struct SweepConfig {
  std::vector<int> degrees{1, 2, 3, 4};
  std::vector<int> subvoxels{1, 2, 4, 8};
  int epochs = 300;
  bool two_step = false;
  int correction_epochs = 20;
  double guess = 0.5;
};
std::vector<SweepRow> discretization_sweep(const ProblemSetup& setup, const RunConfig& config,
                                           const SweepConfig& sweep);

}  // namespace ceilopt
