#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ceilopt::bench {

enum class Landscape { rosenbrock, rastrigin, ackley, levi };
Landscape parse_landscape(const std::string& name);
std::string to_string(Landscape kind);

struct Value {
  double f = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};
Value evaluate(Landscape kind, double x, double y);
std::array<double, 2> global_minimum(Landscape kind);

enum class Optimizer { adam, steepest_descent };

struct BenchConfig {
  Optimizer optimizer = Optimizer::adam;
  int hidden = 100;
  int epochs = 300;
  int probe_epochs = 20;
  std::vector<double> alphas = default_alphas();
  std::uint64_t seed = 0;  // MLP weights and inputs
  double box = 4.0;        // initial guesses from [-box, box]^2

  static std::vector<double> default_alphas();  // half-decades 1e-7 .. 1
};

struct Trajectory {
  std::vector<std::array<double, 3>> points;  // (x, y, f), initial point first
  double alpha = 0.0;
  double final_value() const { return points.back()[2]; }
};

Trajectory run_linear(Landscape kind, double x0, double y0, double alpha, int epochs,
                      Optimizer optimizer);
Trajectory run_nn(Landscape kind, double x0, double y0, double alpha, int epochs,
                  Optimizer optimizer, int hidden, std::uint64_t seed);

// Grid search on the probe length; diverging probes count as +inf.
double tune_alpha(Landscape kind, double x0, double y0, const BenchConfig& config, bool nn);

struct Pair {
  Trajectory linear;
  Trajectory nn;
};
Pair run_pair(Landscape kind, double x0, double y0, const BenchConfig& config);

struct SuccessStats {
  int wins = 0;  // NN strictly better
  int total = 0;
  double percentage() const { return total > 0 ? 100.0 * wins / total : 0.0; }
};
SuccessStats success_statistics(Landscape kind, int n_guesses, const BenchConfig& config,
                                std::uint64_t guess_seed = 1);

// Mean NN cost per epoch over `instances` weight seeds at a fixed alpha.
std::vector<double> instance_average(Landscape kind, double x0, double y0, double alpha,
                                     const BenchConfig& config, int instances);

}  // namespace ceilopt::bench
