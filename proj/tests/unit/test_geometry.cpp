#include <doctest.h>

#include "ceilopt/errors.hpp"
#include "ceilopt/geometry.hpp"

using namespace ceilopt;

TEST_CASE("table 1 grid has a 24-row ceiling") {
  const VoxelGrid grid(ProblemSetup{}, 432, 216);
  CHECK(grid.dx() == doctest::Approx(1.0 / 24));
  CHECK(grid.design_rows() == 24);
  CHECK(grid.design_count() == 10368);
  CHECK(grid.first_design_row() == 192);
  // suppression region 2 m x 2 m around (16, 2)
  CHECK(grid.target_x().begin == 360);
  CHECK(grid.target_x().end == 408);
  CHECK(grid.target_y().begin == 24);
  CHECK(grid.target_y().end == 72);
  CHECK(grid.target_area() == doctest::Approx(4.0));
  CHECK(grid.source_position()[0] == doctest::Approx(2.0));
  CHECK(grid.source_position()[1] == doctest::Approx(2.0));
}

TEST_CASE("design index round trip") {
  const VoxelGrid grid(ProblemSetup{}, 48, 24);
  for (std::size_t d = 0; d < grid.design_count(); ++d) {
    const auto v = grid.design_voxel(d);
    REQUIRE(grid.is_design(v.x, v.y));
    REQUIRE(grid.design_index(v.x, v.y) == d);
  }
  // x-major: consecutive indices walk up a column
  CHECK(grid.design_voxel(1).x == 0);
  CHECK(grid.design_voxel(grid.design_rows()).x == 1);
}

TEST_CASE("invalid setups are rejected") {
  ProblemSetup s;
  s.frequency = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.ceiling_height = 10.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.target_x = 17.5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.reference_pressure = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  // a 4-row grid cannot resolve a 1 m ceiling
  CHECK_THROWS_AS(VoxelGrid(ProblemSetup{}, 8, 4), ConfigError);
}

TEST_CASE("element map shares modes between neighbours") {
  const VoxelGrid grid(ProblemSetup{}, 48, 24);
  for (int q : {1, 2, 3}) {
    const ElementMap map(grid, {q, 2});
    CHECK(map.elements_x() == 24);
    CHECK(map.elements_y() == 12);
    CHECK(map.dof_count() == static_cast<std::size_t>((q * 24 + 1) * (q * 12 + 1)));
    const auto left = map.element_dofs(0, 0);
    const auto right = map.element_dofs(1, 0);
    const int n1 = q + 1;
    // right vertex column of the left element is the left column of the right one
    for (int j = 0; j < n1; ++j) CHECK(left[1 + n1 * j] == right[0 + n1 * j]);
  }
  const auto es = ElementMap(grid, {2, 4}).locate(13, 6);
  CHECK(es.element_x == 3);
  CHECK(es.sub_x == 1);
  CHECK(es.element_y == 1);
  CHECK(es.sub_y == 2);
}
