#pragma once

#include <vector>

#include "vstream/sphere.hpp"
#include "vstream/vec3.hpp"

namespace vstream {

struct TileGrid {
  int rows = 6;
  int cols = 12;
  int tiles() const { return rows * cols; }
};

struct Fov {
  double h_deg = 100.0;
  double v_deg = 100.0;
};

// Tiles whose lat/lon rectangle overlaps the FOV rectangle centered at the
// viewpoint, with longitude wraparound. Tile ids are row-major from the
// north-west corner.
std::vector<int> viewport_tiles(const Vec3& viewpoint, const TileGrid& grid, const Fov& fov);

// Per-segment mapping of tiles to viewport regions plus the rest region.
struct RegionAssignment {
  std::vector<std::vector<int>> regions;  // sorted tile ids, one set per prediction
  std::vector<double> probabilities;      // descending
  std::vector<int> rest;                  // complement, sorted
  int segment = 0;

  // exact-partition and disjointness checks; throws on violation
  void validate(int total_tiles) const;
};

// Overlaps go to the earlier (higher-probability) region; everything outside
// all footprints lands in the rest region. Footprints use the first point of
// each predicted trajectory.
RegionAssignment partition(const PredictionSet& predictions, const TileGrid& grid,
                           const Fov& fov);

}  // namespace vstream
