#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "ceilopt_cli_test";

int run(const std::string& args, const std::string& env = "CEILOPT_THREADS=1") {
  const std::string cmd = env + " " + CEILOPT_CLI + " " + args + " >" + (kRoot / "stdout.txt").string() +
                          " 2>" + (kRoot / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kRoot);
  const auto p = kRoot / name;
  std::ofstream(p) << text;
  return p;
}

const char* kSmall =
    "nx = 144\nny = 72\nfilter_radius = 0.25\nstage1_epochs = 10\nstage2_epochs = 4\n"
    "stage2_check_interval = 2\ntuning_epochs = 2\nq_stage2 = 3\n";

}  // namespace

TEST_CASE("exit codes") {
  fs::create_directories(kRoot);
  CHECK(run("freqs -o " + (kRoot / "f").string()) == 0);
  CHECK(slurp(kRoot / "f" / "freqs.csv").rfind("n,m,hz\n1,0,", 0) == 0);
  CHECK(run("solve -c " + write_config("bad.cfg", "nx = 432\nn_v = 5\n").string()) == 1);
  CHECK(slurp(kRoot / "stderr.txt").find("bad.cfg:2") != std::string::npos);
  CHECK(run("solve -c " + write_config("unknown.cfg", "frequency = 69.43\ncolour = red\n").string()) == 1);
  CHECK(slurp(kRoot / "stderr.txt").find("unknown.cfg:2: unknown key 'colour'") != std::string::npos);
  CHECK(run("solve -c /nonexistent.cfg") == 3);
  CHECK(run("solve --set nx=48 --set ny=24 -o /proc/forbidden") == 3);
  CHECK(run("freqs", "CEILOPT_THREADS=zero") == 1);
  CHECK(run("no-such-command") == 1);
  CHECK(run("solve --set nx=48 --set ny=24 --set frequency=-1") == 1);
}

TEST_CASE("solve writes the level field") {
  const auto out = kRoot / "solve";
  REQUIRE(run("solve --set nx=48 --set ny=24 -o " + out.string()) == 0);
  const std::string img = slurp(out / "field_lp.pgm");
  CHECK(img.rfind("P5\n48 24\n255\n", 0) == 0);
  CHECK(img.size() == 13 + 48 * 24);
  CHECK(slurp(out / "solve.csv").rfind("cost,lp\n", 0) == 0);
}

TEST_CASE("optimize emits every artifact and reproduces from its manifest") {
  const auto cfg = write_config("small.cfg", kSmall);
  const auto a = kRoot / "opt_a", b = kRoot / "opt_b";
  REQUIRE(run("optimize -c " + cfg.string() + " -o " + a.string()) == 0);
  for (const char* f : {"history.csv", "summary.csv", "design_stage1.pgm", "design_final.pgm", "field_lp.pgm", "manifest.txt"}) {
    CHECK(fs::exists(a / f));
  }
  CHECK(slurp(a / "design_final.pgm").rfind("P5\n144 8\n255\n", 0) == 0);
  CHECK(slurp(a / "field_lp.pgm").rfind("P5\n144 72\n255\n", 0) == 0);
  const std::string summary = slurp(a / "summary.csv");
  CHECK(summary.rfind("lp_stage1,lp_stage2,lp_final,tuning_epochs,stage1_epochs,stage2_epochs\n", 0) == 0);
  CHECK(summary.find(",6,10,") != std::string::npos);
  REQUIRE(run("optimize -c " + (a / "manifest.txt").string() + " -o " + b.string()) == 0);
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
  CHECK(slurp(a / "history.csv") == slurp(b / "history.csv"));
  CHECK(slurp(a / "design_final.pgm") == slurp(b / "design_final.pgm"));
}

TEST_CASE("dataset, pretraining and network runs chain through files") {
  const auto cfg = write_config("chain.cfg", std::string(kSmall) +
                                                 "dataset_samples = 2\nseeds = 0\npretrain_epochs = 5\n"
                                                 "nn_alphas = 2e-5\n");
  const auto dir = kRoot / "chain";
  const auto data = (dir / "data.bin").string();
  REQUIRE(run("dataset -c " + cfg.string() + " --set dataset=" + data + " -o " + dir.string()) == 0);
  REQUIRE(run("pretrain -c " + cfg.string() + " --set dataset=" + data + " -o " + dir.string()) == 0);
  CHECK(fs::exists(dir / "net_0.bin"));
  CHECK(slurp(dir / "pretrain_loss.csv").rfind("seed,epoch,loss\n0,0,", 0) == 0);
  REQUIRE(run("optimize -c " + cfg.string() + " --set ansatz=nn --set checkpoint=" + (dir / "net_0.bin").string() +
              " -o " + (dir / "nn").string()) == 0);
  CHECK(slurp(dir / "nn" / "summary.csv").find(",2,10,") != std::string::npos);  // 1 network x 1 alpha x 2
  REQUIRE(run("optimize -c " + cfg.string() + " --nn-guess --set checkpoint=" + (dir / "net_0.bin").string() +
              " -o " + (dir / "guess").string()) == 0);
  CHECK(fs::exists(dir / "guess" / "summary.csv"));
  REQUIRE(run("restart -c " + cfg.string() + " -o " + (dir / "restart").string()) == 0);
  CHECK(slurp(dir / "restart" / "restart.csv").rfind("linear_stage1,linear_final,network_stage1,network_final\n", 0) == 0);
  CHECK(fs::exists(dir / "restart" / "network" / "design_final.pgm"));
}

TEST_CASE("benchmarks") {
  const auto dir = kRoot / "bench";
  REQUIRE(run("bench --set bench_epochs=20 --set bench_probe_epochs=5 -o " + dir.string()) == 0);
  const std::string csv = slurp(dir / "trajectories.csv");
  CHECK(csv.rfind("ansatz,epoch,x,y,f\nlinear,0,3,3,", 0) == 0);
  CHECK(csv.find("\nnn,20,") != std::string::npos);
  CHECK(slurp(dir / "instance_average.csv").rfind("epoch,mean_f\n0,", 0) == 0);
  REQUIRE(run("bench --statistics --set landscape=ackley --set bench_guesses=4 --set bench_epochs=10 "
              "--set bench_probe_epochs=3 -o " + dir.string()) == 0);
  CHECK(slurp(dir / "bench_stats.csv").rfind("landscape,wins,total,percentage\nackley,", 0) == 0);
  CHECK(run("bench --set landscape=sphere") == 1);
}

TEST_CASE("sweep and statistics tables") {
  const auto cfg = write_config("sweep.cfg", std::string(kSmall) +
                                                 "sweep_degrees = 1,2\nsweep_subvoxels = 2\nsweep_epochs = 3\n"
                                                 "study_runs = 2\nstage2_epochs = 0\n");
  const auto dir = kRoot / "sweep";
  REQUIRE(run("sweep -c " + cfg.string() + " -o " + dir.string()) == 0);
  const std::string sweep = slurp(dir / "sweep.csv");
  CHECK(sweep.rfind("degree,subvoxels,seconds,speedup,cost_increase,corrected_lp\n1,2,", 0) == 0);
  REQUIRE(run("stats -c " + cfg.string() + " -o " + dir.string()) == 0);
  CHECK(slurp(dir / "stats.csv").rfind("run,lp\n", 0) == 0);
  CHECK(run("stats -c " + cfg.string() + " --set ansatz=nn -o " + dir.string()) == 1);
}
