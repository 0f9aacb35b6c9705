// ceilopt command-line driver. Every subcommand reads the same key = value
// configuration (see README) with optional --set overrides.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "ceilopt/config.hpp"
#include "ceilopt/errors.hpp"
#include "ceilopt/io.hpp"
#include "ceilopt/parallel.hpp"
#include "ceilopt/transfer.hpp"

namespace fs = std::filesystem;
using namespace ceilopt;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "key = value configuration file");
  cmd->add_option("-s,--set", c.overrides, "override, key=value (repeatable)");
  cmd->add_option("-o,--out", c.out, "output directory (overrides output_dir)");
}

Config load(const Common& c) {
  Config cfg = c.config_path.empty() ? Config{} : parse_config(c.config_path);
  for (const auto& o : c.overrides) apply_override(cfg, o);
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.validate();
  return cfg;
}

std::vector<std::string> split(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<nn::UNet> networks_for(const Config& cfg, const Problem& problem) {
  const int h = problem.grid().nx(), w = problem.grid().design_rows();
  std::vector<nn::UNet> nets;
  if (!cfg.checkpoint.empty()) {
    for (const auto& path : split(cfg.checkpoint)) {
      nets.emplace_back(h, w, 0, cfg.run.leaky_slope);
      nets.back().parameters().load(path);
    }
    return nets;
  }
  std::optional<Dataset> data;
  if (!cfg.dataset_path.empty()) data = Dataset::load(cfg.dataset_path);
  for (auto seed : cfg.run.seeds) {
    nets.emplace_back(h, w, seed, cfg.run.leaky_slope);
    if (data) {
      const auto fit = pretrain(nets.back(), *data, cfg.pretrain);
      std::fprintf(stderr, "pretrained seed %llu: loss %.3g after %d epochs\n",
                   static_cast<unsigned long long>(seed), fit.loss.empty() ? 0.0 : fit.loss.back(),
                   fit.epochs);
    }
  }
  return nets;
}

void report(const RunRecord& r) {
  std::printf("L_p stage 1 %.2f dB | stage 2 %.2f dB | final %.2f dB (gray %.2f dB)\n", r.lp_stage1,
              r.lp_stage2, r.lp_final, r.lp_final_gray);
  std::printf("epochs: tuning %d, stage 1 %d, stage 2 %d; alpha %g; %.1f s\n", r.tuning_epochs,
              r.stage1_epochs, r.stage2_epochs, r.alpha, r.wall_seconds);
}

int cmd_freqs(const Config& cfg, int count) {
  const auto modes = fem::natural_frequencies(cfg.setup.width, cfg.setup.height, 20, 20);
  std::ostringstream csv;
  csv << "n,m,hz\n";
  for (int i = 0; i < count && i < static_cast<int>(modes.size()); ++i) {
    csv << modes[i].n << ',' << modes[i].m << ',' << format_double(modes[i].hz) << '\n';
  }
  std::cout << csv.str();
  write_text(fs::path(cfg.output_dir) / "freqs.csv", csv.str());
  return 0;
}

int cmd_solve(const Config& cfg, double fill, const std::string& design_path) {
  const Problem problem(cfg.setup, cfg.run);
  const auto& grid = problem.grid();
  std::vector<double> design(grid.design_count(), fill);
  if (!design_path.empty()) design = design_from_image(grid, read_pgm(design_path));
  const auto& model = problem.evaluation();
  auto system = model.assemble(fem::MaterialFields::from_design(grid, design));
  const auto p = fem::solve_forward(system);
  const double cost = model.cost(p);
  const double lp = fem::sound_pressure_level(cost, cfg.setup.reference_pressure);
  std::printf("C = %.6g Pa^2, L_p = %.2f dB\n", cost, lp);
  const fs::path dir = cfg.output_dir;
  write_pgm(dir / "field_lp.pgm", level_image(grid, level_field(model, p, cfg.setup.reference_pressure)));
  write_text(dir / "solve.csv", "cost,lp\n" + format_double(cost) + "," + format_double(lp) + "\n");
  write_manifest(dir / "manifest.txt", cfg);
  return 0;
}

int cmd_optimize(const Config& cfg, bool nn_guess) {
  const Problem problem(cfg.setup, cfg.run);
  std::printf("unoptimized L_p %.2f dB\n", unoptimized_level(problem));
  RunRecord rec;
  if (cfg.ansatz == AnsatzKind::linear && !nn_guess) {
    rec = optimize_linear(problem);
  } else {
    const auto nets = networks_for(cfg, problem);
    rec = cfg.ansatz == AnsatzKind::linear ? nn_guess_for_linear(problem, nets)
                                           : optimize_nn(problem, nets, network_input(problem));
  }
  report(rec);
  emit_outputs(rec, problem, cfg, cfg.output_dir);
  return 0;
}

int cmd_dataset(const Config& cfg) {
  const auto data = generate_dataset(cfg.setup, cfg.run, cfg.dataset_samples, cfg.dataset_f_min,
                                     cfg.dataset_f_max, cfg.dataset_seed);
  const fs::path path = cfg.dataset_path.empty() ? fs::path(cfg.output_dir) / "dataset.bin"
                                                 : fs::path(cfg.dataset_path);
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  data.save(path);
  for (const auto& s : data.samples) std::printf("sample at %.2f Hz\n", s.frequency);
  std::printf("%zu samples written to %s\n", data.samples.size(), path.string().c_str());
  write_manifest(fs::path(cfg.output_dir) / "manifest.txt", cfg);
  return 0;
}

int cmd_pretrain(const Config& cfg) {
  if (cfg.dataset_path.empty()) throw ConfigError("pretrain needs 'dataset'");
  const auto data = Dataset::load(cfg.dataset_path);
  const fs::path dir = cfg.output_dir;
  std::ostringstream csv;
  csv << "seed,epoch,loss\n";
  for (auto seed : cfg.run.seeds) {
    nn::UNet net(data.height, data.width, seed, cfg.run.leaky_slope);
    const auto fit = pretrain(net, data, cfg.pretrain);
    for (std::size_t e = 0; e < fit.loss.size(); ++e) csv << seed << ',' << e << ',' << format_double(fit.loss[e]) << '\n';
    const fs::path file = dir / ("net_" + std::to_string(seed) + ".bin");
    fs::create_directories(dir);
    net.parameters().save(file);
    std::printf("seed %llu: %d epochs, loss %.3g -> %s\n", static_cast<unsigned long long>(seed), fit.epochs,
                fit.loss.empty() ? 0.0 : fit.loss.back(), file.string().c_str());
  }
  write_text(dir / "pretrain_loss.csv", csv.str());
  write_manifest(dir / "manifest.txt", cfg);
  return 0;
}

int cmd_restart(const Config& cfg) {
  const auto r = restart_scheme(cfg.setup, cfg.run, cfg.restart_seed, cfg.pretrain);
  const Problem problem(cfg.setup, cfg.run);
  const fs::path dir = cfg.output_dir;
  emit_outputs(r.initial, problem, cfg, dir / "linear");
  emit_outputs(r.final, problem, cfg, dir / "network");
  std::printf("linear phase:\n");
  report(r.initial);
  std::printf("network phase:\n");
  report(r.final);
  write_text(dir / "restart.csv",
             "linear_stage1,linear_final,network_stage1,network_final\n" + format_double(r.initial.lp_stage1) +
                 "," + format_double(r.initial.lp_final) + "," + format_double(r.final.lp_stage1) + "," +
                 format_double(r.final.lp_final) + "\n");
  write_manifest(dir / "manifest.txt", cfg);
  return 0;
}

int cmd_bench(const Config& cfg, bool statistics) {
  const auto kind = bench::parse_landscape(cfg.landscape);
  const fs::path dir = cfg.output_dir;
  if (statistics) {
    const auto s = bench::success_statistics(kind, cfg.bench_guesses, cfg.bench);
    std::printf("%s: NN better in %d of %d runs (%.1f%%)\n", bench::to_string(kind).c_str(), s.wins, s.total,
                s.percentage());
    write_text(dir / "bench_stats.csv", "landscape,wins,total,percentage\n" + bench::to_string(kind) + "," +
                                            std::to_string(s.wins) + "," + std::to_string(s.total) + "," +
                                            format_double(s.percentage()) + "\n");
  } else {
    const auto pair = bench::run_pair(kind, cfg.bench_x0, cfg.bench_y0, cfg.bench);
    std::ostringstream csv;
    csv << "ansatz,epoch,x,y,f\n";
    auto dump = [&](const char* name, const bench::Trajectory& t) {
      for (std::size_t e = 0; e < t.points.size(); ++e) {
        csv << name << ',' << e << ',' << format_double(t.points[e][0]) << ',' << format_double(t.points[e][1])
            << ',' << format_double(t.points[e][2]) << '\n';
      }
    };
    dump("linear", pair.linear);
    dump("nn", pair.nn);
    write_text(dir / "trajectories.csv", csv.str());
    // mean NN cost over weight initializations at the tuned alpha
    const auto mean = bench::instance_average(kind, cfg.bench_x0, cfg.bench_y0, pair.nn.alpha, cfg.bench,
                                              cfg.bench_instances);
    std::ostringstream avg;
    avg << "epoch,mean_f\n";
    for (std::size_t e = 0; e < mean.size(); ++e) avg << e << ',' << format_double(mean[e]) << '\n';
    write_text(dir / "instance_average.csv", avg.str());
    std::printf("linear: f = %.6g (alpha %g) | nn: f = %.6g (alpha %g)\n", pair.linear.final_value(),
                pair.linear.alpha, pair.nn.final_value(), pair.nn.alpha);
  }
  write_manifest(dir / "manifest.txt", cfg);
  return 0;
}

int cmd_sweep(const Config& cfg) {
  const auto rows = discretization_sweep(cfg.setup, cfg.run, cfg.sweep);
  std::ostringstream csv;
  csv << "degree,subvoxels,seconds,speedup,cost_increase,corrected_lp\n";
  for (const auto& r : rows) {
    csv << r.disc.degree << ',' << r.disc.subvoxels << ',' << format_double(r.seconds) << ','
        << format_double(r.speedup) << ',' << format_double(r.cost_increase) << ','
        << format_double(r.corrected_lp) << '\n';
  }
  std::cout << csv.str();
  write_text(fs::path(cfg.output_dir) / "sweep.csv", csv.str());
  write_manifest(fs::path(cfg.output_dir) / "manifest.txt", cfg);
  return 0;
}

int cmd_stats(const Config& cfg) {
  std::optional<Dataset> data;
  if (cfg.ansatz == AnsatzKind::nn) {
    if (cfg.dataset_path.empty()) throw ConfigError("stats with ansatz = nn needs 'dataset'");
    data = Dataset::load(cfg.dataset_path);
  }
  const auto study = statistical_study(cfg.setup, cfg.run, cfg.ansatz, cfg.study_runs,
                                       data ? &*data : nullptr, cfg.pretrain);
  std::ostringstream csv;
  csv << "run,lp\n";
  for (std::size_t i = 0; i < study.levels.size(); ++i) {
    csv << study.labels[i] << ',' << format_double(study.levels[i]) << '\n';
  }
  std::cout << csv.str();
  if (study.failures > 0) std::fprintf(stderr, "%d runs failed\n", study.failures);
  write_text(fs::path(cfg.output_dir) / "stats.csv", csv.str());
  write_manifest(fs::path(cfg.output_dir) / "manifest.txt", cfg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic ceiling topology optimization"};
  app.require_subcommand(1);
  Common common;
  auto* freqs = app.add_subcommand("freqs", "natural frequencies of the empty room");
  auto* solve = app.add_subcommand("solve", "forward solve of one design");
  auto* optimize = app.add_subcommand("optimize", "two-stage design optimization");
  auto* dataset = app.add_subcommand("dataset", "generate pretraining samples");
  auto* pretrain_cmd = app.add_subcommand("pretrain", "fit networks to a dataset");
  auto* restart = app.add_subcommand("restart", "linear run, network fit, network run");
  auto* bench_cmd = app.add_subcommand("bench", "analytic benchmark landscapes");
  auto* sweep = app.add_subcommand("sweep", "discretization study");
  auto* stats = app.add_subcommand("stats", "distribution of final levels over initializations");
  for (auto* cmd : {freqs, solve, optimize, dataset, pretrain_cmd, restart, bench_cmd, sweep, stats}) {
    add_common(cmd, common);
  }
  int count = 10;
  freqs->add_option("-n,--count", count, "number of modes");
  double fill = 0.0;
  std::string design;
  solve->add_option("--fill", fill, "uniform ceiling indicator")->check(CLI::Range(0.0, 1.0));
  solve->add_option("--design", design, "design PGM (white = air)");
  bool nn_guess = false;
  optimize->add_flag("--nn-guess", nn_guess, "linear ansatz started from network predictions");
  bool statistics = false;
  bench_cmd->add_flag("--statistics", statistics, "win percentage over bench_guesses random starts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    thread_count();  // validates the environment early
    const Config cfg = load(common);
    if (*freqs) return cmd_freqs(cfg, count);
    if (*solve) return cmd_solve(cfg, fill, design);
    if (*optimize) return cmd_optimize(cfg, nn_guess);
    if (*dataset) return cmd_dataset(cfg);
    if (*pretrain_cmd) return cmd_pretrain(cfg);
    if (*restart) return cmd_restart(cfg);
    if (*bench_cmd) return cmd_bench(cfg, statistics);
    if (*sweep) return cmd_sweep(cfg);
    if (*stats) return cmd_stats(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 3;
  }
  return 0;
}
