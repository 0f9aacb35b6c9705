#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace ceilopt {

/// Physical description of the room: a rectangular air domain with a
/// designable ceiling band, a point source and a rectangular region whose
/// mean squared pressure is to be suppressed. Lengths in meters.
struct ProblemSetup {
  double width = 18.0;  // a
  double height = 9.0;  // b
  double ceiling_height = 1.0;
  double source_x = 2.0;
  double source_y = 2.0;
  // center and size of the suppression region
  double target_x = 16.0;
  double target_y = 2.0;
  double target_width = 2.0;
  double target_height = 2.0;
  double frequency = 69.43;        // Hz
  double source_amplitude = 10.0;  // Pa/m^2
  double damping = 0.01;           // mass-proportional, 1/s
  double reference_pressure = 2e-5;  // Pa, for sound pressure levels

  void validate() const;
};

/// Half-open voxel index range [begin, end) along one axis.
struct IndexRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool contains(int i) const { return i >= begin && i < end; }
};

struct VoxelIndex {
  int x = 0;
  int y = 0;
};

/// Uniform voxel grid over the domain, origin bottom-left, y upward.
/// The designable ceiling occupies the top `design_rows()` rows.
class VoxelGrid {
 public:
  VoxelGrid(const ProblemSetup& setup, int nx, int ny);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  std::size_t voxel_count() const { return static_cast<std::size_t>(nx_) * ny_; }
  const ProblemSetup& setup() const { return setup_; }

  // Row-major over y: index = x + nx * y.
  std::size_t voxel_index(int x, int y) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(nx_) * y;
  }
  std::array<double, 2> voxel_center(int x, int y) const {
    return {(x + 0.5) * dx_, (y + 0.5) * dy_};
  }

  int design_rows() const { return design_rows_; }
  int first_design_row() const { return ny_ - design_rows_; }
  std::size_t design_count() const {
    return static_cast<std::size_t>(nx_) * design_rows_;
  }
  bool is_design(int x, int y) const {
    (void)x;
    return y >= first_design_row();
  }
  // Design fields are stored x-major, matching a (nx x rows) image whose
  // second axis runs upward: index = x * rows + (y - first_design_row).
  std::size_t design_index(int x, int y) const {
    return static_cast<std::size_t>(x) * design_rows_ + (y - first_design_row());
  }
  VoxelIndex design_voxel(std::size_t design_idx) const {
    return {static_cast<int>(design_idx / design_rows_),
            first_design_row() + static_cast<int>(design_idx % design_rows_)};
  }
  std::vector<bool> design_mask() const;

  IndexRange target_x() const { return target_x_; }
  IndexRange target_y() const { return target_y_; }
  bool in_target(int x, int y) const {
    return target_x_.contains(x) && target_y_.contains(y);
  }
  std::size_t target_voxel_count() const {
    return static_cast<std::size_t>(target_x_.size()) * target_y_.size();
  }
  double target_area() const { return target_voxel_count() * dx_ * dy_; }

  // Source position snapped to the nearest voxel corner.
  std::array<double, 2> source_position() const { return source_; }

 private:
  ProblemSetup setup_;
  int nx_;
  int ny_;
  double dx_;
  double dy_;
  int design_rows_;
  IndexRange target_x_;
  IndexRange target_y_;
  std::array<double, 2> source_;
};

/// Polynomial degree and subvoxels per element edge.
struct Discretization {
  int degree = 2;
  int subvoxels = 4;
};

struct ElementSubvoxel {
  int element_x = 0;
  int element_y = 0;
  int sub_x = 0;
  int sub_y = 0;
};

/// Index bookkeeping between voxels, finite cells and hierarchical modes.
///
/// Every element carries (q+1)^2 tensor-product modes. Mode (i, j) with
/// 1-D index i in {0: left vertex, 1: right vertex, 2..q: bubble} is placed
/// on a virtual lattice of (q*nex+1) x (q*ney+1) points; neighbouring
/// elements share vertex and edge modes through that lattice.
class ElementMap {
 public:
  ElementMap(const VoxelGrid& grid, Discretization disc);

  int elements_x() const { return nex_; }
  int elements_y() const { return ney_; }
  std::size_t element_count() const { return static_cast<std::size_t>(nex_) * ney_; }
  int degree() const { return disc_.degree; }
  int subvoxels() const { return disc_.subvoxels; }
  Discretization discretization() const { return disc_; }
  double element_width() const { return hx_; }
  double element_height() const { return hy_; }

  int modes_per_element() const { return (disc_.degree + 1) * (disc_.degree + 1); }
  int lattice_x() const { return disc_.degree * nex_ + 1; }
  int lattice_y() const { return disc_.degree * ney_ + 1; }
  std::size_t dof_count() const {
    return static_cast<std::size_t>(lattice_x()) * lattice_y();
  }

  ElementSubvoxel locate(int voxel_x, int voxel_y) const {
    const int n = disc_.subvoxels;
    return {voxel_x / n, voxel_y / n, voxel_x % n, voxel_y % n};
  }
  VoxelIndex voxel(const ElementSubvoxel& es) const {
    const int n = disc_.subvoxels;
    return {es.element_x * n + es.sub_x, es.element_y * n + es.sub_y};
  }
  std::size_t element_index(int ex, int ey) const {
    return static_cast<std::size_t>(ex) + static_cast<std::size_t>(nex_) * ey;
  }
  // Local subvoxel index s = sub_x + n_v * sub_y.
  int subvoxel_index(int sx, int sy) const { return sx + disc_.subvoxels * sy; }

  // Local mode index m = i + (q+1) * j.
  std::vector<std::size_t> element_dofs(int ex, int ey) const;
  const std::vector<std::size_t>& dofs(std::size_t element) const {
    return dofs_[element];
  }

 private:
  Discretization disc_;
  int nex_;
  int ney_;
  double hx_;
  double hy_;
  std::vector<std::vector<std::size_t>> dofs_;
};

}  // namespace ceilopt
