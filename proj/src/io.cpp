#include "ceilopt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ceilopt/errors.hpp"

#ifndef CEILOPT_VERSION
#define CEILOPT_VERSION "unknown"
#endif

namespace ceilopt {

std::string code_version() { return CEILOPT_VERSION; }

namespace {

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::uint8_t to_gray(double v) {
  return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw UsageError("image size mismatch");
  }
  auto out = open_output(path, std::ios::out | std::ios::binary);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  finish(out, path);
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string magic;
  GrayImage img;
  int maxval = 0;
  in >> magic;
  auto skip_comments = [&] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  skip_comments();
  in >> img.width;
  skip_comments();
  in >> img.height;
  skip_comments();
  in >> maxval;
  if (!in || magic != "P5" || img.width <= 0 || img.height <= 0 || maxval != 255) {
    throw IoError("not an 8-bit binary PGM: " + path.string());
  }
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw IoError("truncated PGM: " + path.string());
  return img;
}

GrayImage design_image(const VoxelGrid& grid, const std::vector<double>& design) {
  if (design.size() != grid.design_count()) throw UsageError("design size mismatch");
  GrayImage img{grid.nx(), grid.design_rows(), {}};
  img.pixels.resize(grid.design_count());
  for (int r = 0; r < img.height; ++r) {
    const int y = grid.ny() - 1 - r;
    for (int x = 0; x < img.width; ++x) {
      img.pixels[static_cast<std::size_t>(r) * img.width + x] = to_gray(1.0 - design[grid.design_index(x, y)]);
    }
  }
  return img;
}

std::vector<double> design_from_image(const VoxelGrid& grid, const GrayImage& image) {
  if (image.width != grid.nx() || image.height != grid.design_rows()) {
    throw ConfigError("design image is " + std::to_string(image.width) + "x" +
                      std::to_string(image.height) + ", expected " + std::to_string(grid.nx()) +
                      "x" + std::to_string(grid.design_rows()));
  }
  std::vector<double> design(grid.design_count());
  for (int r = 0; r < image.height; ++r) {
    const int y = grid.ny() - 1 - r;
    for (int x = 0; x < image.width; ++x) {
      design[grid.design_index(x, y)] = 1.0 - image.pixels[static_cast<std::size_t>(r) * image.width + x] / 255.0;
    }
  }
  return design;
}

std::vector<double> level_field(const fem::HelmholtzModel& model, const fem::ComplexVector& pressure,
                                double reference_pressure) {
  auto sq = model.voxel_pressure_squared(pressure);
  const double floor = reference_pressure * reference_pressure * 1e-12;
  for (double& v : sq) v = 10.0 * std::log10(std::max(v, floor) / (reference_pressure * reference_pressure));
  return sq;
}

GrayImage level_image(const VoxelGrid& grid, const std::vector<double>& levels) {
  if (levels.size() != grid.voxel_count()) throw UsageError("field size mismatch");
  const auto [lo, hi] = std::minmax_element(levels.begin(), levels.end());
  const double span = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
  GrayImage img{grid.nx(), grid.ny(), std::vector<std::uint8_t>(grid.voxel_count())};
  for (int r = 0; r < grid.ny(); ++r) {
    const int y = grid.ny() - 1 - r;
    for (int x = 0; x < grid.nx(); ++x) {
      img.pixels[static_cast<std::size_t>(r) * grid.nx() + x] = to_gray((levels[grid.voxel_index(x, y)] - *lo) / span);
    }
  }
  return img;
}

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

void write_history_csv(const std::filesystem::path& path, const RunRecord& record) {
  auto out = open_output(path);
  out << "epoch,stage,cost,lp,beta,alpha\n";
  for (const auto& e : record.history) {
    out << e.epoch << ',' << e.stage << ',' << format_double(e.cost) << ',' << format_double(e.lp) << ','
        << format_double(e.beta) << ',' << format_double(e.alpha) << '\n';
  }
  finish(out, path);
}

void write_summary_csv(const std::filesystem::path& path, const RunRecord& record) {
  auto out = open_output(path);
  out << "lp_stage1,lp_stage2,lp_final,tuning_epochs,stage1_epochs,stage2_epochs\n"
      << format_double(record.lp_stage1) << ',' << format_double(record.lp_stage2) << ','
      << format_double(record.lp_final) << ',' << record.tuning_epochs << ',' << record.stage1_epochs << ','
      << record.stage2_epochs << '\n';
  finish(out, path);
}

void write_manifest(const std::filesystem::path& path, const Config& config) {
  auto out = open_output(path);
  out << "# ceilopt " << code_version() << "\n# reload with --config to reproduce this run\n" << to_text(config);
  finish(out, path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  finish(out, path);
}

void emit_outputs(const RunRecord& record, const Problem& problem, const Config& config,
                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_history_csv(dir / "history.csv", record);
  write_summary_csv(dir / "summary.csv", record);
  write_pgm(dir / "design_stage1.pgm", design_image(problem.grid(), record.design_stage1));
  write_pgm(dir / "design_final.pgm", design_image(problem.grid(), record.design_final));
  const auto& model = problem.evaluation();
  auto system = model.assemble(fem::MaterialFields::from_design(problem.grid(), record.design_final));
  const auto p = fem::solve_forward(system);
  write_pgm(dir / "field_lp.pgm",
            level_image(problem.grid(), level_field(model, p, config.setup.reference_pressure)));
  write_manifest(dir / "manifest.txt", config);
}

}  // namespace ceilopt
