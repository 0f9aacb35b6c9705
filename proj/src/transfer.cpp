#include "ceilopt/transfer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "ceilopt/errors.hpp"
#include "ceilopt/parallel.hpp"

namespace ceilopt {

static_assert(std::endian::native == std::endian::little, "dataset files assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'L', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated dataset file");
  return v;
}

std::vector<double> to_double(const std::vector<std::uint8_t>& label) {
  return {label.begin(), label.end()};
}

}  // namespace

void Dataset::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset " + path.string());
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(samples.size()));
  put(out, static_cast<std::int32_t>(height));
  put(out, static_cast<std::int32_t>(width));
  for (const auto& s : samples) put(out, s.frequency);
  for (const auto& s : samples) {
    out.write(reinterpret_cast<const char*>(s.input.data()),
              static_cast<std::streamsize>(s.input.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(s.label.data()), static_cast<std::streamsize>(s.label.size()));
  }
  if (!out) throw IoError("failed writing dataset " + path.string());
}

Dataset Dataset::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a dataset file: " + path.string());
  if (get<std::uint32_t>(in) != kVersion) throw IoError("unsupported dataset version");
  Dataset d;
  const auto count = get<std::uint32_t>(in);
  d.height = get<std::int32_t>(in);
  d.width = get<std::int32_t>(in);
  if (d.height <= 0 || d.width <= 0) throw IoError("corrupt dataset header");
  const std::size_t n = static_cast<std::size_t>(d.height) * d.width;
  d.samples.resize(count);
  for (auto& s : d.samples) s.frequency = get<double>(in);
  for (auto& s : d.samples) {
    s.input.resize(n);
    s.label.resize(n);
    in.read(reinterpret_cast<char*>(s.input.data()), static_cast<std::streamsize>(n * sizeof(double)));
    in.read(reinterpret_cast<char*>(s.label.data()), static_cast<std::streamsize>(n));
    if (!in) throw IoError("truncated dataset file");
  }
  return d;
}

std::vector<double> network_input(const Problem& problem) {
  return scale_max_abs(initial_sensitivity(problem));
}

Dataset generate_dataset(const ProblemSetup& setup, const RunConfig& config, int n_samples,
                         double f_min, double f_max, std::uint64_t seed) {
  if (n_samples < 1) throw ConfigError("dataset needs at least one sample");
  if (!(f_min > 0.0 && f_max > f_min)) throw ConfigError("invalid dataset frequency range");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(f_min, f_max);
  std::vector<double> freqs(static_cast<std::size_t>(n_samples));
  for (double& f : freqs) f = uniform(rng);

  std::vector<std::optional<PretrainSample>> slots(freqs.size());
  parallel_for(freqs.size(), [&](std::size_t i) {
    ProblemSetup s = setup;
    s.frequency = freqs[i];
    try {
      const Problem problem(s, config);
      PretrainSample sample;
      sample.frequency = freqs[i];
      sample.input = network_input(problem);
      const RunRecord rec = optimize_linear(problem);
      sample.label.assign(rec.design_final.begin(), rec.design_final.end());
      slots[i] = std::move(sample);
    } catch (const NumericalError& e) {
      std::cerr << "warning: dropping sample at " << freqs[i] << " Hz: " << e.what() << "\n";
    }
  });

  Dataset d;
  const VoxelGrid grid(setup, config.nx, config.ny);
  d.height = grid.nx();
  d.width = grid.design_rows();
  for (auto& s : slots) {
    if (s) d.samples.push_back(std::move(*s));
  }
  return d;
}

PretrainResult pretrain(nn::UNet& net, const Dataset& data, const PretrainConfig& config) {
  if (data.samples.empty()) throw UsageError("pretraining needs a nonempty dataset");
  if (data.height != net.height() || data.width != net.width()) {
    throw ConfigError("dataset shape does not match the network");
  }
  auto& params = net.parameters();
  Adam adam;
  PretrainResult out;
  const double inv_n = 1.0 / static_cast<double>(data.samples.size());
  std::vector<std::vector<double>> labels;
  for (const auto& s : data.samples) labels.push_back(to_double(s.label));

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    params.zero_grad();
    double loss = 0.0;
    for (std::size_t k = 0; k < data.samples.size(); ++k) {
      const nn::Tensor y = net.forward(nn::constant({1, 1, data.height, data.width}, data.samples[k].input));
      const nn::Tensor l = nn::scale(nn::mse(y, labels[k]), inv_n);
      loss += l->item();
      nn::backward(l);
    }
    if (!std::isfinite(loss)) {
      throw NumericalError("pretraining diverged at epoch " + std::to_string(epoch));
    }
    out.loss.push_back(loss);
    out.epochs = epoch + 1;
    if (loss < config.target_loss) break;
    const auto w = static_cast<std::size_t>(config.plateau_window);
    if (config.plateau_window > 0 && out.loss.size() > w) {
      const double before = out.loss[out.loss.size() - 1 - w];
      if (before - loss < config.plateau_tolerance * before) break;
    }
    const auto grads = params.grads();
    const std::vector<std::span<const double>> cgrads(grads.begin(), grads.end());
    const auto values = params.values();
    adam.step(values, cgrads, config.alpha);
  }
  return out;
}

double grayness(const std::vector<double>& field) {
  if (field.empty()) return 0.0;
  double acc = 0.0;
  for (double z : field) acc += std::min(z, 1.0 - z);
  return acc / static_cast<double>(field.size());
}

RestartRecord restart_scheme(const ProblemSetup& setup, const RunConfig& config,
                             std::uint64_t seed, const PretrainConfig& fit) {
  const Problem problem(setup, config);
  RestartRecord out;
  out.initial = optimize_linear(problem);

  Dataset single;
  single.height = problem.grid().nx();
  single.width = problem.grid().design_rows();
  PretrainSample sample;
  sample.frequency = setup.frequency;
  sample.input = network_input(problem);
  sample.label.assign(out.initial.design_final.begin(), out.initial.design_final.end());
  single.samples.push_back(sample);

  nn::UNet net(single.height, single.width, seed, config.leaky_slope);
  out.fit = pretrain(net, single, fit);

  RunConfig second = config;
  second.stage2_reset_beta = true;
  const Problem restarted(setup, second);
  NNAnsatz ansatz(net, sample.input, config.clip_norm);
  out.final = optimize(restarted, ansatz, config.nn_alpha);
  out.final.tuning_epochs = out.initial.tuning_epochs;
  out.final.seed = seed;
  return out;
}

RunRecord nn_guess_for_linear(const Problem& problem, const std::vector<nn::UNet>& networks) {
  if (networks.empty()) throw UsageError("need at least one pretrained network");
  const RunConfig& cfg = problem.config();
  const std::vector<double> input = network_input(problem);
  std::vector<std::vector<double>> guesses;
  for (const auto& net : networks) {
    auto g = net.predict(input);
    for (double& z : g) z = std::clamp(z, 0.0, 1.0);
    guesses.push_back(std::move(g));
  }
  const std::vector<double> alphas{0.5 * cfg.linear_alpha, cfg.linear_alpha, 2.0 * cfg.linear_alpha};
  std::vector<double> costs(guesses.size() * alphas.size());
  parallel_for(costs.size(), [&](std::size_t i) {
    LinearAnsatz a(guesses[i / alphas.size()]);
    costs[i] = probe(problem, a, alphas[i % alphas.size()], cfg.tuning_epochs);
  });
  const std::size_t best =
      static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin());
  LinearAnsatz a(guesses[best / alphas.size()]);
  RunRecord rec = optimize(problem, a, alphas[best % alphas.size()]);
  rec.tuning_epochs = static_cast<int>(costs.size()) * cfg.tuning_epochs;
  rec.seed = best / alphas.size();
  return rec;
}

StudyResult statistical_study(const ProblemSetup& setup, const RunConfig& config,
                              AnsatzKind kind, int n_runs, const Dataset* data,
                              const PretrainConfig& pretrain_config) {
  if (n_runs < 2) throw ConfigError("a statistical study needs at least two runs");
  if (kind == AnsatzKind::nn && (data == nullptr || data->samples.empty())) {
    throw UsageError("the NN study needs a pretraining dataset");
  }
  const Problem problem(setup, config);
  const std::vector<double> input = network_input(problem);
  std::vector<std::optional<double>> levels(static_cast<std::size_t>(n_runs));
  std::vector<std::string> labels(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    std::ostringstream label;
    try {
      if (kind == AnsatzKind::linear) {
        const double guess = static_cast<double>(i) / (n_runs - 1);
        label << "guess=" << guess;
        LinearAnsatz a(problem.grid().design_count(), guess);
        levels[i] = optimize(problem, a, config.linear_alpha).lp_final;
      } else {
        label << "seed=" << i;
        nn::UNet net(problem.grid().nx(), problem.grid().design_rows(), i, config.leaky_slope);
        pretrain(net, *data, pretrain_config);
        NNAnsatz a(std::move(net), input, config.clip_norm);
        levels[i] = optimize(problem, a, config.nn_alpha).lp_final;
      }
    } catch (const NumericalError& e) {
      std::cerr << "warning: run " << i << " failed: " << e.what() << "\n";
    }
    labels[i] = label.str();
  });
  StudyResult out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i]) {
      out.levels.push_back(*levels[i]);
      out.labels.push_back(labels[i]);
    } else {
      ++out.failures;
    }
  }
  return out;
}

}  // namespace ceilopt
