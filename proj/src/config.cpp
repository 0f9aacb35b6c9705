#include "ceilopt/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ceilopt/errors.hpp"

namespace ceilopt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Locale-independent number parsing and shortest round-trip printing.
template <class T>
T parse_number(const std::string& text) {
  T v{};
  const auto s = trim(text);
  if (s.empty()) throw ConfigError("missing value");
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  const auto [end, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError("'" + s + "' is not a valid number");
  }
  return v;
}

template <class T>
std::string format_number(T v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

bool parse_bool(const std::string& text) {
  const auto s = trim(text);
  if (s.empty()) throw ConfigError("missing value");
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("'" + s + "' is not a boolean");
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

template <class T>
std::string format_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_number(v[i]);
  return out;
}

struct Key {
  std::string name;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

#define NUM(key, field, T)                                                         \
  Key {                                                                            \
    key, [](Config& c, const std::string& v) { c.field = parse_number<T>(v); },    \
        [](const Config& c) { return format_number(c.field); }                     \
  }
#define FLAG(key, field)                                                           \
  Key {                                                                            \
    key, [](Config& c, const std::string& v) { c.field = parse_bool(v); },         \
        [](const Config& c) { return std::string(c.field ? "true" : "false"); }    \
  }
#define LIST(key, field, T)                                                        \
  Key {                                                                            \
    key, [](Config& c, const std::string& v) { c.field = parse_list<T>(v); },      \
        [](const Config& c) { return format_list(c.field); }                       \
  }
#define TEXT(key, field)                                                           \
  Key {                                                                            \
    key, [](Config& c, const std::string& v) { c.field = trim(v); },               \
        [](const Config& c) { return c.field; }                                    \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      NUM("width", setup.width, double),
      NUM("height", setup.height, double),
      NUM("ceiling_height", setup.ceiling_height, double),
      NUM("source_x", setup.source_x, double),
      NUM("source_y", setup.source_y, double),
      NUM("target_x", setup.target_x, double),
      NUM("target_y", setup.target_y, double),
      NUM("target_width", setup.target_width, double),
      NUM("target_height", setup.target_height, double),
      NUM("frequency", setup.frequency, double),
      NUM("source_amplitude", setup.source_amplitude, double),
      NUM("damping", setup.damping, double),
      NUM("reference_pressure", setup.reference_pressure, double),
      NUM("nx", run.nx, int),
      NUM("ny", run.ny, int),
      NUM("q", run.stage1.degree, int),
      Key{"n_v",
          [](Config& c, const std::string& v) {
            c.run.stage1.subvoxels = c.run.stage2.subvoxels = parse_number<int>(v);
          },
          [](const Config& c) { return format_number(c.run.stage1.subvoxels); }},
      NUM("q_stage2", run.stage2.degree, int),
      NUM("n_v_stage2", run.stage2.subvoxels, int),
      NUM("q_eval", run.evaluation.degree, int),
      NUM("n_v_eval", run.evaluation.subvoxels, int),
      NUM("stage1_epochs", run.stage1_epochs, int),
      NUM("stage2_epochs", run.stage2_epochs, int),
      NUM("stage2_factor", run.stage2_factor, double),
      NUM("stage2_check_interval", run.stage2_check_interval, int),
      FLAG("stage2_reset_beta", run.stage2_reset_beta),
      NUM("beta_cap1", run.beta_cap1, double),
      NUM("beta_cap2", run.beta_cap2, double),
      NUM("filter_radius", run.filter_radius, double),
      NUM("eta", run.eta, double),
      Key{"ansatz",
          [](Config& c, const std::string& v) {
            const auto s = trim(v);
            if (s == "linear") {
              c.ansatz = AnsatzKind::linear;
            } else if (s == "nn") {
              c.ansatz = AnsatzKind::nn;
            } else {
              throw ConfigError("ansatz must be 'linear' or 'nn'");
            }
          },
          [](const Config& c) { return std::string(c.ansatz == AnsatzKind::nn ? "nn" : "linear"); }},
      NUM("linear_alpha", run.linear_alpha, double),
      NUM("nn_alpha", run.nn_alpha, double),
      LIST("nn_alphas", run.nn_alphas, double),
      LIST("linear_guesses", run.linear_guesses, double),
      LIST("seeds", run.seeds, std::uint64_t),
      NUM("clip_norm", run.clip_norm, double),
      NUM("leaky_slope", run.leaky_slope, double),
      NUM("tuning_epochs", run.tuning_epochs, int),
      TEXT("output_dir", output_dir),
      NUM("dataset_samples", dataset_samples, int),
      NUM("dataset_f_min", dataset_f_min, double),
      NUM("dataset_f_max", dataset_f_max, double),
      NUM("dataset_seed", dataset_seed, std::uint64_t),
      TEXT("dataset", dataset_path),
      TEXT("checkpoint", checkpoint),
      NUM("pretrain_epochs", pretrain.max_epochs, int),
      NUM("pretrain_alpha", pretrain.alpha, double),
      NUM("pretrain_target_loss", pretrain.target_loss, double),
      NUM("pretrain_plateau_window", pretrain.plateau_window, int),
      NUM("pretrain_plateau_tolerance", pretrain.plateau_tolerance, double),
      NUM("study_runs", study_runs, int),
      NUM("restart_seed", restart_seed, std::uint64_t),
      TEXT("landscape", landscape),
      Key{"bench_optimizer",
          [](Config& c, const std::string& v) {
            const auto s = trim(v);
            if (s == "adam") {
              c.bench.optimizer = bench::Optimizer::adam;
            } else if (s == "sgd") {
              c.bench.optimizer = bench::Optimizer::steepest_descent;
            } else {
              throw ConfigError("bench_optimizer must be 'adam' or 'sgd'");
            }
          },
          [](const Config& c) {
            return std::string(c.bench.optimizer == bench::Optimizer::adam ? "adam" : "sgd");
          }},
      NUM("bench_hidden", bench.hidden, int),
      NUM("bench_epochs", bench.epochs, int),
      NUM("bench_probe_epochs", bench.probe_epochs, int),
      LIST("bench_alphas", bench.alphas, double),
      NUM("bench_seed", bench.seed, std::uint64_t),
      NUM("bench_box", bench.box, double),
      NUM("bench_guesses", bench_guesses, int),
      NUM("bench_x0", bench_x0, double),
      NUM("bench_y0", bench_y0, double),
      NUM("bench_instances", bench_instances, int),
      LIST("sweep_degrees", sweep.degrees, int),
      LIST("sweep_subvoxels", sweep.subvoxels, int),
      NUM("sweep_epochs", sweep.epochs, int),
      FLAG("sweep_two_step", sweep.two_step),
      NUM("sweep_correction_epochs", sweep.correction_epochs, int),
      NUM("sweep_guess", sweep.guess, double),
  };
  return table;
}

#undef NUM
#undef FLAG
#undef LIST
#undef TEXT

const Key& find_key(const std::string& name) {
  for (const Key& k : keys()) {
    if (k.name == name) return k;
  }
  throw ConfigError("unknown key '" + name + "'");
}

std::pair<std::string, std::string> split_assignment(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError("expected 'key = value'");
  std::string key = trim(line.substr(0, eq));
  std::string value = trim(line.substr(eq + 1));
  if (key.empty()) throw ConfigError("missing key before '='");
  return {key, value};
}

}  // namespace

void Config::validate() const {
  setup.validate();
  run.validate();
  if (dataset_samples < 1) throw ConfigError("dataset_samples must be at least 1");
  if (!(dataset_f_min > 0.0 && dataset_f_max > dataset_f_min)) throw ConfigError("invalid dataset frequency range");
  if (pretrain.max_epochs < 0 || !(pretrain.alpha > 0.0)) throw ConfigError("invalid pretraining settings");
  if (study_runs < 2) throw ConfigError("study_runs must be at least 2");
  bench::parse_landscape(landscape);
  if (bench.hidden < 1 || bench.epochs < 0 || bench.probe_epochs < 0 || bench.alphas.empty()) {
    throw ConfigError("invalid benchmark settings");
  }
  if (bench_guesses < 1 || bench_instances < 1) throw ConfigError("invalid benchmark counts");
}

Config parse_config_text(const std::string& text, const std::string& source) {
  Config c;
  std::map<std::string, int> line_of;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    try {
      const auto [key, value] = split_assignment(body);
      find_key(key).set(c, value);
      line_of[key] = line;
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line) + ": " + e.what());
    }
  }
  // Cross-key checks, reported at the line that set the offending key.
  auto at = [&](const std::string& key) {
    const auto it = line_of.find(key);
    return it == line_of.end() ? source : source + ":" + std::to_string(it->second);
  };
  for (const auto& [key, disc] :
       {std::pair{"n_v", c.run.stage1}, std::pair{"n_v_stage2", c.run.stage2},
        std::pair{"n_v_eval", c.run.evaluation}}) {
    if (disc.subvoxels < 1) throw ConfigError(at(key) + ": " + key + " must be at least 1");
    if (c.run.nx % disc.subvoxels != 0 || c.run.ny % disc.subvoxels != 0) {
      const std::string where = line_of.count(key) ? at(key) : at(line_of.count("nx") ? "nx" : "ny");
      throw ConfigError(where + ": " + key + " = " + std::to_string(disc.subvoxels) +
                        " does not divide the " + std::to_string(c.run.nx) + "x" +
                        std::to_string(c.run.ny) + " voxel grid");
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

Config parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read configuration " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

void apply_override(Config& config, const std::string& assignment) {
  try {
    const auto [key, value] = split_assignment(assignment);
    find_key(key).set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError("override '" + assignment + "': " + e.what());
  }
}

std::string to_text(const Config& config) {
  std::string out;
  for (const Key& k : keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key& k : keys()) out.push_back(k.name);
  return out;
}

}  // namespace ceilopt
