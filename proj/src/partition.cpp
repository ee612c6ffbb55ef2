#include "vstream/partition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vstream {

namespace {

// strict interval overlap (positive measure)
bool overlaps(double a_lo, double a_hi, double b_lo, double b_hi) {
  return std::max(a_lo, b_lo) < std::min(a_hi, b_hi);
}

// overlap with longitude wraparound: compare against shifted copies
bool lon_overlaps(double f_lo, double f_hi, double t_lo, double t_hi) {
  for (int shift = -1; shift <= 1; ++shift) {
    const double s = 360.0 * shift;
    if (overlaps(f_lo + s, f_hi + s, t_lo, t_hi)) return true;
  }
  return false;
}

}  // namespace

std::vector<int> viewport_tiles(const Vec3& viewpoint, const TileGrid& grid, const Fov& fov) {
  if (grid.rows <= 0 || grid.cols <= 0) throw std::invalid_argument("viewport_tiles: bad grid");
  if (!(fov.h_deg > 0.0) || fov.h_deg > 360.0)
    throw std::invalid_argument("viewport_tiles: horizontal FOV must be in (0, 360]");
  if (!(fov.v_deg > 0.0) || fov.v_deg > 180.0)
    throw std::invalid_argument("viewport_tiles: vertical FOV must be in (0, 180]");
  if (!is_unit(viewpoint)) throw std::invalid_argument("viewport_tiles: viewpoint not unit norm");

  double lat, lon;
  to_lat_lon_deg(viewpoint, lat, lon);

  // FOV rectangle in equirectangular space, latitude clamped at the poles
  const double lat_lo = std::max(-90.0, lat - fov.v_deg / 2.0);
  const double lat_hi = std::min(90.0, lat + fov.v_deg / 2.0);
  const double lon_lo = lon - fov.h_deg / 2.0;
  const double lon_hi = lon + fov.h_deg / 2.0;

  const double tile_lat = 180.0 / grid.rows;
  const double tile_lon = 360.0 / grid.cols;
  const bool full_circle = fov.h_deg >= 360.0;
  const bool full_sphere_lat = fov.v_deg >= 180.0;

  std::vector<int> out;
  for (int r = 0; r < grid.rows; ++r) {
    const double t_lat_hi = 90.0 - r * tile_lat;
    const double t_lat_lo = t_lat_hi - tile_lat;
    if (!full_sphere_lat && !overlaps(lat_lo, lat_hi, t_lat_lo, t_lat_hi)) continue;
    for (int c = 0; c < grid.cols; ++c) {
      const double t_lon_lo = -180.0 + c * tile_lon;
      const double t_lon_hi = t_lon_lo + tile_lon;
      if (full_circle || lon_overlaps(lon_lo, lon_hi, t_lon_lo, t_lon_hi))
        out.push_back(r * grid.cols + c);
    }
  }
  return out;
}

void RegionAssignment::validate(int total_tiles) const {
  if (regions.size() != probabilities.size())
    throw std::runtime_error("region assignment: region/probability count mismatch");
  for (size_t i = 1; i < probabilities.size(); ++i)
    if (probabilities[i] > probabilities[i - 1] + 1e-12)
      throw std::runtime_error("region assignment: probabilities not descending");
  std::vector<int> seen(total_tiles, 0);
  auto mark = [&](const std::vector<int>& tiles) {
    for (int t : tiles) {
      if (t < 0 || t >= total_tiles) throw std::runtime_error("region assignment: tile out of range");
      ++seen[t];
    }
  };
  for (const auto& reg : regions) mark(reg);
  mark(rest);
  for (int t = 0; t < total_tiles; ++t) {
    if (seen[t] == 0) throw std::runtime_error("region assignment: tile missing from partition");
    if (seen[t] > 1) throw std::runtime_error("region assignment: tile in multiple sets");
  }
}

RegionAssignment partition(const PredictionSet& predictions, const TileGrid& grid,
                           const Fov& fov) {
  predictions.validate();
  for (const auto& traj : predictions.trajectories)
    if (traj.empty()) throw std::invalid_argument("partition: empty trajectory");

  RegionAssignment out;
  out.probabilities = predictions.probabilities;
  std::vector<char> claimed(grid.tiles(), 0);
  for (const auto& traj : predictions.trajectories) {
    std::vector<int> footprint = viewport_tiles(traj.front(), grid, fov);
    std::vector<int> region;
    for (int t : footprint) {
      if (!claimed[t]) {
        claimed[t] = 1;
        region.push_back(t);
      }
    }
    out.regions.push_back(std::move(region));
  }
  for (int t = 0; t < grid.tiles(); ++t)
    if (!claimed[t]) out.rest.push_back(t);
  out.validate(grid.tiles());
  return out;
}

}  // namespace vstream
