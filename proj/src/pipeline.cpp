#include "ceilopt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "ceilopt/errors.hpp"
#include "ceilopt/fem/adjoint.hpp"
#include "ceilopt/parallel.hpp"

namespace ceilopt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_finite(double cost, int epoch) {
  if (!std::isfinite(cost)) {
    throw NumericalError("non-finite cost at epoch " + std::to_string(epoch));
  }
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  for (const Discretization& d : {stage1, stage2, evaluation}) {
    if (d.degree < 1) fail("polynomial degree must be at least 1");
    if (d.subvoxels < 1) fail("subvoxels per element must be at least 1");
    if (nx % d.subvoxels != 0 || ny % d.subvoxels != 0) {
      std::ostringstream m;
      m << "n_v = " << d.subvoxels << " does not divide the " << nx << "x" << ny << " voxel grid";
      fail(m.str());
    }
  }
  if (stage1_epochs < 0 || stage2_epochs < 0 || tuning_epochs < 0) fail("epoch counts must be non-negative");
  if (stage2_check_interval < 1) fail("stage-2 check interval must be positive");
  if (!(stage2_factor > 0.0)) fail("stage-2 factor must be positive");
  if (!(beta_cap1 >= 1.0) || !(beta_cap2 >= 1.0)) fail("beta caps must be at least 1");
  if (!(filter_radius > 0.0)) fail("filter radius must be positive");
  if (!(eta > 0.0 && eta < 1.0)) fail("projection threshold must lie in (0, 1)");
  if (!(linear_alpha >= 0.0) || !(nn_alpha >= 0.0)) fail("learning rates must be non-negative");
  if (!(clip_norm > 0.0)) fail("clipping norm must be positive");
  if (linear_guesses.empty() || nn_alphas.empty() || seeds.empty()) fail("tuning grids must be nonempty");
  for (double g : linear_guesses) {
    if (!(g >= 0.0 && g <= 1.0)) fail("initial guesses must lie in [0, 1]");
  }
}

Problem::Problem(const ProblemSetup& setup, const RunConfig& config)
    : config_(config),
      grid_((config.validate(), VoxelGrid(setup, config.nx, config.ny))),
      filter_(DensityFilter::for_design(grid_, config.filter_radius)) {
  stage1_ = std::make_shared<fem::HelmholtzModel>(grid_, config.stage1);
  stage2_ = std::make_shared<fem::HelmholtzModel>(grid_, config.stage2);
  evaluation_ = std::make_shared<fem::HelmholtzModel>(grid_, config.evaluation);
}

LinearAnsatz::LinearAnsatz(std::vector<double> initial) : zeta_(std::move(initial)) {
  for (double z : zeta_) {
    if (!(z >= 0.0 && z <= 1.0)) throw ConfigError("linear initial guess outside [0, 1]");
  }
}

void LinearAnsatz::step(const std::vector<double>& gradient, double alpha) {
  adam_.step(zeta_, gradient, alpha);
  for (double& z : zeta_) z = std::clamp(z, 0.0, 1.0);
}

NNAnsatz::NNAnsatz(nn::UNet net, std::vector<double> input, double clip_norm)
    : net_(std::move(net)), input_(std::move(input)), clip_norm_(clip_norm) {
  if (input_.size() != static_cast<std::size_t>(net_.height()) * net_.width()) {
    throw UsageError("network input does not match the design region");
  }
}

std::vector<double> NNAnsatz::design() {
  output_ = net_.forward(nn::constant({1, 1, net_.height(), net_.width()}, input_));
  return output_->value;
}

void NNAnsatz::step(const std::vector<double>& gradient, double alpha) {
  if (!output_) throw UsageError("NN ansatz step before design()");
  auto& params = net_.parameters();
  params.zero_grad();
  nn::backward(nn::weighted_sum(output_, gradient));
  output_.reset();
  const auto grads = params.grads();
  last_norm_ = clip_gradients(grads, clip_norm_);
  const std::vector<std::span<const double>> cgrads(grads.begin(), grads.end());
  const auto values = params.values();
  adam_.step(values, cgrads, alpha);
}

double evaluate_design(const fem::HelmholtzModel& model, const std::vector<double>& design) {
  return fem::sound_pressure_level(fem::design_cost(model, design),
                                  model.grid().setup().reference_pressure);
}

double unoptimized_level(const Problem& problem) {
  return evaluate_design(problem.evaluation(),
                         std::vector<double>(problem.grid().design_count(), 0.0));
}

namespace {

struct Loop {
  const Problem& problem;
  Ansatz& ansatz;
  FilterProjection fp;
  double alpha0;
  bool nn;

  Loop(const Problem& p, Ansatz& a, double alpha)
      : problem(p), ansatz(a), fp(p.filter(), p.config().eta), alpha0(alpha),
        nn(a.kind() == AnsatzKind::nn) {}

  // Schedule and clipping only act on the network ansatz.
  double alpha(int epoch) const { return nn ? lr_schedule(alpha0, epoch) : alpha0; }
  double level(double cost) const {
    return fem::sound_pressure_level(cost, problem.setup().reference_pressure);
  }

  // One epoch: returns the cost of the current design; updates unless `last`.
  EpochRecord epoch(const fem::HelmholtzModel& model, int stage, int epoch, double beta,
                    bool update, std::vector<double>* physical = nullptr) {
    const std::vector<double> phys = fp.forward(ansatz.design(), beta);
    const fem::CostGradient cg = fem::cost_and_gradient(model, phys);
    check_finite(cg.cost, epoch);
    EpochRecord r{epoch, stage, cg.cost, level(cg.cost), beta, alpha(epoch)};
    if (update) ansatz.step(fp.backward(cg.gradient), r.alpha);
    if (physical) *physical = phys;
    return r;
  }
};

}  // namespace

RunRecord optimize(const Problem& problem, Ansatz& ansatz, double alpha) {
  const auto t0 = Clock::now();
  const RunConfig& cfg = problem.config();
  Loop loop(problem, ansatz, alpha);
  RunRecord rec;
  rec.ansatz = ansatz.kind();
  rec.alpha = alpha;

  int epoch = 0;
  for (int k = 0; k < cfg.stage1_epochs; ++k, ++epoch) {
    rec.history.push_back(
        loop.epoch(problem.stage1(), 1, epoch, beta_schedule(epoch, cfg.beta_cap1), true));
  }
  rec.stage1_epochs = cfg.stage1_epochs;

  std::vector<double> phys = loop.fp.forward(ansatz.design(), beta_schedule(epoch, cfg.beta_cap1));
  rec.stage1_cost = rec.history.empty() ? fem::design_cost(problem.stage1(), phys)
                                        : rec.history.back().cost;
  rec.design_stage1 = threshold(phys, cfg.eta);
  rec.lp_stage1 = evaluate_design(problem.stage1(), rec.design_stage1);
  rec.lp_stage1_gray = evaluate_design(problem.stage1(), phys);

  if (cfg.stage2_epochs > 0) {
    // The first epoch always runs; the stop test is applied every
    // `stage2_check_interval` epochs against the stage-1 cost.
    const double limit = cfg.stage2_factor * rec.stage1_cost;
    const int beta_origin = cfg.stage2_reset_beta ? 0 : epoch;
    for (int k = 0; k < cfg.stage2_epochs; ++k) {
      const double beta = beta_schedule(beta_origin + k, cfg.beta_cap2);
      phys = loop.fp.forward(ansatz.design(), beta);
      const fem::CostGradient cg = fem::cost_and_gradient(problem.stage2(), phys);
      check_finite(cg.cost, epoch);
      rec.history.push_back(
          {epoch, 2, cg.cost, loop.level(cg.cost), beta, loop.alpha(epoch)});
      ++rec.stage2_epochs;
      const bool stop = k == cfg.stage2_epochs - 1 ||
                        (k % cfg.stage2_check_interval == 0 && cg.cost <= limit);
      if (stop) break;  // the stopping epoch does not update
      ansatz.step(loop.fp.backward(cg.gradient), rec.history.back().alpha);
      ++epoch;
    }
  }

  rec.design_final = threshold(phys, cfg.eta);
  rec.design_final_gray = phys;
  rec.lp_stage2 = cfg.stage2_epochs > 0 ? evaluate_design(problem.stage2(), rec.design_final)
                                        : rec.lp_stage1;
  rec.lp_final = evaluate_design(problem.evaluation(), rec.design_final);
  rec.lp_final_gray = evaluate_design(problem.evaluation(), phys);
  rec.wall_seconds = seconds_since(t0);
  return rec;
}

double probe(const Problem& problem, Ansatz& ansatz, double alpha, int epochs) {
  const RunConfig& cfg = problem.config();
  Loop loop(problem, ansatz, alpha);
  double cost = std::numeric_limits<double>::quiet_NaN();
  for (int e = 0; e < epochs; ++e) {
    cost = loop.epoch(problem.stage1(), 1, e, beta_schedule(e, cfg.beta_cap1), true).cost;
  }
  return cost;
}

LinearChoice tune_linear(const Problem& problem) {
  const RunConfig& cfg = problem.config();
  LinearChoice out;
  out.probe_costs.assign(cfg.linear_guesses.size(), 0.0);
  parallel_for(cfg.linear_guesses.size(), [&](std::size_t i) {
    LinearAnsatz a(problem.grid().design_count(), cfg.linear_guesses[i]);
    out.probe_costs[i] = probe(problem, a, cfg.linear_alpha, cfg.tuning_epochs);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.probe_costs.size(); ++i) {
    if (out.probe_costs[i] < out.probe_costs[best]) best = i;  // ties keep the first
  }
  out.guess = cfg.linear_guesses[best];
  out.epochs = static_cast<int>(cfg.linear_guesses.size()) * cfg.tuning_epochs;
  return out;
}

RunRecord optimize_linear(const Problem& problem) {
  const LinearChoice choice = tune_linear(problem);
  LinearAnsatz a(problem.grid().design_count(), choice.guess);
  RunRecord rec = optimize(problem, a, problem.config().linear_alpha);
  rec.tuning_epochs = choice.epochs;
  rec.initial_guess = choice.guess;
  return rec;
}

NNChoice tune_nn(const Problem& problem, const std::vector<nn::UNet>& networks,
                 const std::vector<double>& input) {
  const RunConfig& cfg = problem.config();
  if (networks.empty()) throw UsageError("NN tuning needs at least one network");
  const std::size_t na = cfg.nn_alphas.size();
  NNChoice out;
  out.probe_costs.assign(networks.size() * na, 0.0);
  parallel_for(out.probe_costs.size(), [&](std::size_t i) {
    NNAnsatz a(networks[i / na], input, cfg.clip_norm);
    out.probe_costs[i] = probe(problem, a, cfg.nn_alphas[i % na], cfg.tuning_epochs);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.probe_costs.size(); ++i) {
    if (out.probe_costs[i] < out.probe_costs[best]) best = i;
  }
  out.network = best / na;
  out.alpha = cfg.nn_alphas[best % na];
  out.epochs = static_cast<int>(out.probe_costs.size()) * cfg.tuning_epochs;
  return out;
}

RunRecord optimize_nn(const Problem& problem, const std::vector<nn::UNet>& networks,
                      const std::vector<double>& input) {
  const NNChoice choice = tune_nn(problem, networks, input);
  NNAnsatz a(networks[choice.network], input, problem.config().clip_norm);
  RunRecord rec = optimize(problem, a, choice.alpha);
  rec.tuning_epochs = choice.epochs;
  rec.seed = choice.network;
  return rec;
}

std::vector<double> initial_sensitivity(const Problem& problem) {
  return fem::cost_and_gradient(problem.stage1(),
                                std::vector<double>(problem.grid().design_count(), 0.0))
      .gradient;
}

std::vector<double> scale_max_abs(std::vector<double> field) {
  double m = 0.0;
  for (double v : field) m = std::max(m, std::abs(v));
  if (m > 0.0) {
    for (double& v : field) v /= m;
  }
  return field;
}

std::vector<SweepRow> discretization_sweep(const ProblemSetup& setup, const RunConfig& config,
                                           const SweepConfig& sweep) {
  std::vector<SweepRow> rows;
  for (int q : sweep.degrees) {
    for (int nv : sweep.subvoxels) {
      if (config.nx % nv != 0 || config.ny % nv != 0) continue;
      RunConfig c = config;
      c.stage1 = {q, nv};
      if (sweep.two_step) {
        c.stage1_epochs = sweep.epochs - sweep.correction_epochs;
        c.stage2 = {q + 2, nv};
        c.stage2_epochs = sweep.correction_epochs;
        c.stage2_factor = std::numeric_limits<double>::min();  // never stops early
      } else {
        c.stage1_epochs = sweep.epochs;
        c.stage2 = c.stage1;
        c.stage2_epochs = 0;
      }
      const Problem problem(setup, c);
      LinearAnsatz a(problem.grid().design_count(), sweep.guess);
      const auto t0 = Clock::now();
      const RunRecord rec = optimize(problem, a, c.linear_alpha);
      SweepRow row;
      row.disc = {q, nv};
      row.seconds = seconds_since(t0);
      const fem::HelmholtzModel& trained = sweep.two_step ? problem.stage2() : problem.stage1();
      const double c_eval = fem::design_cost(problem.evaluation(), rec.design_final);
      row.cost_increase = c_eval / fem::design_cost(trained, rec.design_final);
      row.corrected_lp = fem::sound_pressure_level(c_eval, setup.reference_pressure);
      rows.push_back(row);
    }
  }
  if (!rows.empty()) {
    auto base = std::find_if(rows.begin(), rows.end(), [](const SweepRow& r) {
      return r.disc.degree == 1 && r.disc.subvoxels == 1;
    });
    const double t_ref = base != rows.end() ? base->seconds : rows.front().seconds;
    for (auto& r : rows) r.speedup = t_ref / r.seconds;
  }
  return rows;
}

}  // namespace ceilopt
