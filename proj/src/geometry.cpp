#include "ceilopt/geometry.hpp"

#include <cmath>
#include <sstream>

#include "ceilopt/errors.hpp"

namespace ceilopt {

namespace {

int snap(double coordinate, double spacing) {
  return static_cast<int>(std::lround(coordinate / spacing));
}

}  // namespace

void ProblemSetup::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid setup: " + what); };
  if (!(width > 0.0) || !(height > 0.0)) fail("domain size must be positive");
  if (!(ceiling_height > 0.0) || !(ceiling_height < height)) {
    fail("ceiling height must lie in (0, height)");
  }
  if (source_x < 0.0 || source_x > width || source_y < 0.0 || source_y > height) {
    fail("source outside domain");
  }
  if (!(target_width > 0.0) || !(target_height > 0.0)) fail("empty suppression region");
  if (target_x - target_width / 2 < 0.0 || target_x + target_width / 2 > width ||
      target_y - target_height / 2 < 0.0 || target_y + target_height / 2 > height) {
    fail("suppression region outside domain");
  }
  if (!(frequency > 0.0)) fail("frequency must be positive");
  if (damping < 0.0) fail("damping must be non-negative");
  if (!(reference_pressure > 0.0)) fail("reference pressure must be positive");
}

VoxelGrid::VoxelGrid(const ProblemSetup& setup, int nx, int ny)
    : setup_(setup), nx_(nx), ny_(ny) {
  if (nx < 2 || ny < 2) throw ConfigError("voxel grid needs at least 2x2 voxels");
  setup.validate();
  dx_ = setup.width / nx;
  dy_ = setup.height / ny;

  design_rows_ = snap(setup.ceiling_height, dy_);
  if (design_rows_ < 1 || design_rows_ >= ny) {
    std::ostringstream msg;
    msg << "ceiling band of " << setup.ceiling_height << " m does not cover whole voxel rows on a "
        << ny << "-row grid";
    throw ConfigError(msg.str());
  }

  target_x_ = {snap(setup.target_x - setup.target_width / 2, dx_),
               snap(setup.target_x + setup.target_width / 2, dx_)};
  target_y_ = {snap(setup.target_y - setup.target_height / 2, dy_),
               snap(setup.target_y + setup.target_height / 2, dy_)};
  if (target_x_.size() < 1 || target_y_.size() < 1) {
    throw ConfigError("suppression region collapses to zero voxels on this grid");
  }
  if (target_y_.end > first_design_row()) {
    throw ConfigError("suppression region overlaps the designable ceiling");
  }

  source_ = {snap(setup.source_x, dx_) * dx_, snap(setup.source_y, dy_) * dy_};
}

std::vector<bool> VoxelGrid::design_mask() const {
  std::vector<bool> mask(voxel_count(), false);
  for (int y = first_design_row(); y < ny_; ++y) {
    for (int x = 0; x < nx_; ++x) mask[voxel_index(x, y)] = true;
  }
  return mask;
}

ElementMap::ElementMap(const VoxelGrid& grid, Discretization disc) : disc_(disc) {
  if (disc.degree < 1) throw ConfigError("polynomial degree must be at least 1");
  if (disc.subvoxels < 1) throw ConfigError("subvoxel count must be at least 1");
  if (grid.nx() % disc.subvoxels != 0 || grid.ny() % disc.subvoxels != 0) {
    std::ostringstream msg;
    msg << "n_v = " << disc.subvoxels << " does not divide the " << grid.nx() << "x" << grid.ny()
        << " voxel grid";
    throw ConfigError(msg.str());
  }
  nex_ = grid.nx() / disc.subvoxels;
  ney_ = grid.ny() / disc.subvoxels;
  hx_ = grid.dx() * disc.subvoxels;
  hy_ = grid.dy() * disc.subvoxels;

  dofs_.reserve(element_count());
  for (int ey = 0; ey < ney_; ++ey) {
    for (int ex = 0; ex < nex_; ++ex) dofs_.push_back(element_dofs(ex, ey));
  }
}

std::vector<std::size_t> ElementMap::element_dofs(int ex, int ey) const {
  const int q = disc_.degree;
  auto offset = [q](int i) { return i == 0 ? 0 : (i == 1 ? q : i - 1); };
  std::vector<std::size_t> out;
  out.reserve(modes_per_element());
  const std::size_t stride = static_cast<std::size_t>(lattice_x());
  for (int j = 0; j <= q; ++j) {
    for (int i = 0; i <= q; ++i) {
      const std::size_t gx = static_cast<std::size_t>(ex) * q + offset(i);
      const std::size_t gy = static_cast<std::size_t>(ey) * q + offset(j);
      out.push_back(gx + stride * gy);
    }
  }
  return out;
}

}  // namespace ceilopt
