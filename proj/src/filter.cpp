#include "ceilopt/filter.hpp"

#include <algorithm>
#include <cmath>

#include "ceilopt/errors.hpp"

namespace ceilopt {

DensityFilter::DensityFilter(int nx, int rows, double dx, double dy, double radius)
    : radius_(radius) {
  if (nx < 1 || rows < 1) throw ConfigError("filter image must be nonempty");
  if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("filter spacing must be positive");
  if (!(radius > 0.0)) throw ConfigError("filter radius must be positive");
  const int rx = static_cast<int>(std::ceil(radius / dx));
  const int ry = static_cast<int>(std::ceil(radius / dy));
  offsets_.reserve(static_cast<std::size_t>(nx) * rows + 1);
  offsets_.push_back(0);
  for (int x = 0; x < nx; ++x) {
    for (int y = 0; y < rows; ++y) {
      const std::size_t begin = cols_.size();
      double sum = 0.0;
      for (int i = std::max(0, x - rx); i <= std::min(nx - 1, x + rx); ++i) {
        for (int j = std::max(0, y - ry); j <= std::min(rows - 1, y + ry); ++j) {
          const double d = std::hypot((i - x) * dx, (j - y) * dy);
          if (!(d < radius)) continue;
          cols_.push_back(i * rows + j);
          vals_.push_back(radius - d);
          sum += radius - d;
        }
      }
      for (std::size_t k = begin; k < vals_.size(); ++k) vals_[k] /= sum;
      offsets_.push_back(cols_.size());
    }
  }
}

DensityFilter DensityFilter::for_design(const VoxelGrid& grid, double radius) {
  return DensityFilter(grid.nx(), grid.design_rows(), grid.dx(), grid.dy(), radius);
}

std::vector<double> DensityFilter::apply(std::span<const double> field) const {
  if (field.size() != size()) throw UsageError("field size does not match the filter");
  std::vector<double> out(size(), 0.0);
  for (std::size_t v = 0; v < size(); ++v) {
    double acc = 0.0;
    for (std::size_t k = offsets_[v]; k < offsets_[v + 1]; ++k) acc += vals_[k] * field[cols_[k]];
    out[v] = acc;
  }
  return out;
}

std::vector<double> DensityFilter::apply_transpose(std::span<const double> upstream) const {
  if (upstream.size() != size()) throw UsageError("field size does not match the filter");
  std::vector<double> out(size(), 0.0);
  for (std::size_t v = 0; v < size(); ++v) {
    for (std::size_t k = offsets_[v]; k < offsets_[v + 1]; ++k) out[cols_[k]] += vals_[k] * upstream[v];
  }
  return out;
}

double project(double x, double beta, double eta) {
  const double a = std::tanh(beta * eta);
  return (a + std::tanh(beta * (x - eta))) / (a + std::tanh(beta * (1.0 - eta)));
}

double project_derivative(double x, double beta, double eta) {
  const double t = std::tanh(beta * (x - eta));
  return beta * (1.0 - t * t) / (std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta)));
}

double beta_schedule(int epoch, double cap) {
  if (epoch < 0) throw UsageError("epoch must be non-negative");
  return std::min(std::pow(1.02, epoch), cap);
}

std::vector<double> threshold(std::span<const double> field, double eta) {
  std::vector<double> out(field.size());
  std::transform(field.begin(), field.end(), out.begin(),
                 [eta](double x) { return x >= eta ? 1.0 : 0.0; });
  return out;
}

std::vector<double> FilterProjection::forward(std::span<const double> design, double beta) {
  beta_ = beta;
  filtered_ = filter_.apply(design);
  std::vector<double> out(filtered_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(project(filtered_[i], beta, eta_), 0.0, 1.0);
  return out;
}

std::vector<double> FilterProjection::backward(std::span<const double> upstream) const {
  if (!has_cache()) throw UsageError("filter/projection backward called before forward");
  if (upstream.size() != filtered_.size()) throw UsageError("gradient size mismatch");
  std::vector<double> g(upstream.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = upstream[i] * project_derivative(filtered_[i], beta_, eta_);
  }
  return filter_.apply_transpose(g);
}

}  // namespace ceilopt
