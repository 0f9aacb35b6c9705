#pragma once

#include <span>
#include <vector>

#include "ceilopt/geometry.hpp"

namespace ceilopt {

/// Linear-decay density filter over an nx x rows design image stored
/// x-major (index = x * rows + y). Neighbourhoods are clipped at the image
/// border and renormalized, so every row of the operator sums to one.
class DensityFilter {
 public:
  DensityFilter(int nx, int rows, double dx, double dy, double radius);
  static DensityFilter for_design(const VoxelGrid& grid, double radius);

  std::size_t size() const { return offsets_.size() - 1; }
  double radius() const { return radius_; }

  std::vector<double> apply(std::span<const double> field) const;
  // Transposed operator, for the chain rule.
  std::vector<double> apply_transpose(std::span<const double> upstream) const;

  // Row v as (column, normalized weight) pairs.
  std::span<const int> columns(std::size_t v) const {
    return {cols_.data() + offsets_[v], cols_.data() + offsets_[v + 1]};
  }
  std::span<const double> weights(std::size_t v) const {
    return {vals_.data() + offsets_[v], vals_.data() + offsets_[v + 1]};
  }

 private:
  double radius_;
  std::vector<std::size_t> offsets_;
  std::vector<int> cols_;
  std::vector<double> vals_;
};

// Smoothed Heaviside
//   [tanh(b eta) + tanh(b (x - eta))] / [tanh(b eta) + tanh(b (1 - eta))].
double project(double x, double beta, double eta = 0.5);
double project_derivative(double x, double beta, double eta = 0.5);

// min(1.02^epoch, cap).
double beta_schedule(int epoch, double cap);
inline constexpr double kStageOneBetaCap = 75.0;
inline constexpr double kStageTwoBetaCap = 150.0;

// 1 where x >= eta, else 0.
std::vector<double> threshold(std::span<const double> field, double eta = 0.5);

/// zeta -> filtered -> projected, caching the intermediate for backward.
class FilterProjection {
 public:
  FilterProjection(DensityFilter filter, double eta = 0.5)
      : filter_(std::move(filter)), eta_(eta) {}

  const DensityFilter& filter() const { return filter_; }
  double eta() const { return eta_; }

  std::vector<double> forward(std::span<const double> design, double beta);
  std::vector<double> backward(std::span<const double> upstream) const;

  bool has_cache() const { return !filtered_.empty(); }
  const std::vector<double>& filtered() const { return filtered_; }

 private:
  DensityFilter filter_;
  double eta_;
  double beta_ = 1.0;
  std::vector<double> filtered_;
};

}  // namespace ceilopt
