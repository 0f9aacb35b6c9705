#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ceilopt/config.hpp"
#include "ceilopt/pipeline.hpp"

namespace ceilopt {

std::string code_version();

/// 8-bit grayscale image, rows top to bottom.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

void write_pgm(const std::filesystem::path& path, const GrayImage& image);  // binary P5
GrayImage read_pgm(const std::filesystem::path& path);

// width = nx, height = design rows, top row = ceiling top; air 255, solid 0
// (intermediate values mapped linearly).
GrayImage design_image(const VoxelGrid& grid, const std::vector<double>& design);
std::vector<double> design_from_image(const VoxelGrid& grid, const GrayImage& image);

// Per-voxel L_p (grid layout) and its image over the whole domain, linearly
// mapped from [min, max] dB to [0, 255].
std::vector<double> level_field(const fem::HelmholtzModel& model, const fem::ComplexVector& pressure,
                                double reference_pressure);
GrayImage level_image(const VoxelGrid& grid, const std::vector<double>& levels);

// Shortest representation that round-trips, '.' decimal separator.
std::string format_double(double value);

void write_history_csv(const std::filesystem::path& path, const RunRecord& record);
// lp_stage1, lp_stage2, lp_final, then tuning, stage-1 and stage-2 epochs.
void write_summary_csv(const std::filesystem::path& path, const RunRecord& record);
void write_manifest(const std::filesystem::path& path, const Config& config);
void write_text(const std::filesystem::path& path, const std::string& text);

// history.csv, summary.csv, design_stage1.pgm, design_final.pgm, field_lp.pgm
// and manifest.txt. The field is the final thresholded design solved on the
// evaluation discretization.
void emit_outputs(const RunRecord& record, const Problem& problem, const Config& config,
                  const std::filesystem::path& dir);

}  // namespace ceilopt
