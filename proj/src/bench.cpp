#include "ceilopt/bench.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ceilopt/errors.hpp"
#include "ceilopt/nn/networks.hpp"
#include "ceilopt/optim.hpp"
#include "ceilopt/parallel.hpp"

namespace ceilopt::bench {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Updates (x, y) in place with one optimizer step.
struct Stepper {
  Optimizer kind;
  Adam adam;
  void operator()(std::span<double> p, std::span<const double> g, double alpha) {
    if (kind == Optimizer::adam) {
      adam.step(p, g, alpha);
    } else {
      sgd_step(p, g, alpha);
    }
  }
};

}  // namespace

Landscape parse_landscape(const std::string& name) {
  if (name == "rosenbrock") return Landscape::rosenbrock;
  if (name == "rastrigin") return Landscape::rastrigin;
  if (name == "ackley") return Landscape::ackley;
  if (name == "levi") return Landscape::levi;
  throw ConfigError("unknown landscape '" + name + "'");
}

std::string to_string(Landscape kind) {
  switch (kind) {
    case Landscape::rosenbrock: return "rosenbrock";
    case Landscape::rastrigin: return "rastrigin";
    case Landscape::ackley: return "ackley";
    case Landscape::levi: return "levi";
  }
  return "?";
}

Value evaluate(Landscape kind, double x, double y) {
  switch (kind) {
    case Landscape::rosenbrock: {
      const double a = 1.0 - x;
      const double b = y - x * x;
      return {a * a + 100.0 * b * b, -2.0 * a - 400.0 * x * b, 200.0 * b};
    }
    case Landscape::rastrigin:
      return {20.0 + x * x - 10.0 * std::cos(2 * kPi * x) + y * y - 10.0 * std::cos(2 * kPi * y),
              2.0 * x + 20.0 * kPi * std::sin(2 * kPi * x),
              2.0 * y + 20.0 * kPi * std::sin(2 * kPi * y)};
    case Landscape::ackley: {
      const double r = std::sqrt(0.5 * (x * x + y * y));
      const double e1 = std::exp(-0.2 * r);
      const double e2 = std::exp(0.5 * (std::cos(2 * kPi * x) + std::cos(2 * kPi * y)));
      const double f = -20.0 * e1 - e2 + std::numbers::e + 20.0;
      // d/dx of -20 exp(-0.2 r) = 2 e1 x / r (undefined at r = 0; take 0).
      const double g1 = r > 0.0 ? 2.0 * e1 / r : 0.0;
      return {f, g1 * x + e2 * kPi * std::sin(2 * kPi * x), g1 * y + e2 * kPi * std::sin(2 * kPi * y)};
    }
    case Landscape::levi: {
      const double s3x = std::sin(3 * kPi * x);
      const double s3y = std::sin(3 * kPi * y);
      const double s2y = std::sin(2 * kPi * y);
      const double ax = 1.0 + s3y * s3y;
      const double ay = 1.0 + s2y * s2y;
      const double f = s3x * s3x + (x - 1) * (x - 1) * ax + (y - 1) * (y - 1) * ay;
      const double dx = 6 * kPi * s3x * std::cos(3 * kPi * x) + 2 * (x - 1) * ax;
      const double dy = (x - 1) * (x - 1) * 6 * kPi * s3y * std::cos(3 * kPi * y) +
                        2 * (y - 1) * ay + (y - 1) * (y - 1) * 4 * kPi * s2y * std::cos(2 * kPi * y);
      return {f, dx, dy};
    }
  }
  return {};
}

std::array<double, 2> global_minimum(Landscape kind) {
  switch (kind) {
    case Landscape::rosenbrock:
    case Landscape::levi:
      return {1.0, 1.0};
    default:
      return {0.0, 0.0};
  }
}

std::vector<double> BenchConfig::default_alphas() {
  std::vector<double> a;
  for (int k = -14; k <= 0; ++k) a.push_back(std::pow(10.0, 0.5 * k));
  return a;
}

Trajectory run_linear(Landscape kind, double x0, double y0, double alpha, int epochs,
                      Optimizer optimizer) {
  Trajectory t;
  t.alpha = alpha;
  std::array<double, 2> p{x0, y0};
  Stepper step{optimizer, {}};
  Value v = evaluate(kind, p[0], p[1]);
  t.points.push_back({p[0], p[1], v.f});
  for (int e = 0; e < epochs; ++e) {
    const std::array<double, 2> g{v.dx, v.dy};
    step(p, g, alpha);
    v = evaluate(kind, p[0], p[1]);
    t.points.push_back({p[0], p[1], v.f});
    if (!std::isfinite(v.f)) break;
  }
  return t;
}

Trajectory run_nn(Landscape kind, double x0, double y0, double alpha, int epochs,
                  Optimizer optimizer, int hidden, std::uint64_t seed) {
  nn::BenchMLP mlp(hidden, seed);
  mlp.set_offset_to(x0, y0);
  auto& params = mlp.parameters();
  Stepper step{optimizer, {}};
  Trajectory t;
  t.alpha = alpha;
  for (int e = 0;; ++e) {
    const nn::Tensor out = mlp.forward();
    const double x = out->value[0];
    const double y = out->value[1];
    const Value v = evaluate(kind, x, y);
    t.points.push_back({x, y, v.f});
    if (e == epochs || !std::isfinite(v.f)) break;
    params.zero_grad();
    const double g[2] = {v.dx, v.dy};
    nn::backward(nn::weighted_sum(out, g));
    const auto grads = params.grads();
    const auto values = params.values();
    try {
      if (optimizer == Optimizer::adam) {
        const std::vector<std::span<const double>> cg(grads.begin(), grads.end());
        step.adam.step(values, cg, alpha);
      } else {
        for (std::size_t b = 0; b < values.size(); ++b) sgd_step(values[b], grads[b], alpha);
      }
    } catch (const NumericalError&) {
      t.points.push_back({x, y, kInf});
      break;
    }
  }
  return t;
}

namespace {

double probe_value(const Trajectory& t) {
  const double f = t.final_value();
  return std::isfinite(f) ? f : kInf;
}

}  // namespace

double tune_alpha(Landscape kind, double x0, double y0, const BenchConfig& config, bool nn) {
  double best_alpha = config.alphas.front();
  double best = kInf;
  for (double a : config.alphas) {
    double f = kInf;
    try {
      f = probe_value(nn ? run_nn(kind, x0, y0, a, config.probe_epochs, config.optimizer,
                                  config.hidden, config.seed)
                         : run_linear(kind, x0, y0, a, config.probe_epochs, config.optimizer));
    } catch (const NumericalError&) {
    }
    if (f < best) {
      best = f;
      best_alpha = a;
    }
  }
  return best_alpha;
}

Pair run_pair(Landscape kind, double x0, double y0, const BenchConfig& config) {
  Pair p;
  const double al = tune_alpha(kind, x0, y0, config, false);
  const double an = tune_alpha(kind, x0, y0, config, true);
  p.linear = run_linear(kind, x0, y0, al, config.epochs, config.optimizer);
  p.nn = run_nn(kind, x0, y0, an, config.epochs, config.optimizer, config.hidden, config.seed);
  return p;
}

SuccessStats success_statistics(Landscape kind, int n_guesses, const BenchConfig& config,
                                std::uint64_t guess_seed) {
  if (n_guesses < 1) throw ConfigError("need at least one initial guess");
  std::mt19937_64 rng(guess_seed);
  std::uniform_real_distribution<double> u(-config.box, config.box);
  std::vector<std::array<double, 2>> guesses(static_cast<std::size_t>(n_guesses));
  for (auto& g : guesses) g = {u(rng), u(rng)};
  std::vector<char> win(guesses.size(), 0);
  parallel_for(guesses.size(), [&](std::size_t i) {
    const Pair p = run_pair(kind, guesses[i][0], guesses[i][1], config);
    win[i] = probe_value(p.nn) < probe_value(p.linear);
  });
  SuccessStats s;
  s.total = n_guesses;
  for (char w : win) s.wins += w;
  return s;
}

std::vector<double> instance_average(Landscape kind, double x0, double y0, double alpha,
                                     const BenchConfig& config, int instances) {
  std::vector<double> mean(static_cast<std::size_t>(config.epochs) + 1, 0.0);
  for (int s = 0; s < instances; ++s) {
    const Trajectory t = run_nn(kind, x0, y0, alpha, config.epochs, config.optimizer, config.hidden,
                                config.seed + static_cast<std::uint64_t>(s));
    for (std::size_t e = 0; e < mean.size(); ++e) {
      mean[e] += (e < t.points.size() ? t.points[e][2] : t.points.back()[2]) / instances;
    }
  }
  return mean;
}

}  // namespace ceilopt::bench
