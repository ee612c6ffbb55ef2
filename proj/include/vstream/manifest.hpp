#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vstream {

// Tiled 360 video description: an equirectangular rows x cols tile grid, a
// bitrate ladder, and the per-(segment, tile, rung) encoded sizes in megabits.
struct VideoManifest {
  int rows = 0;
  int cols = 0;
  int segments = 0;
  double segment_duration_s = 0.0;
  std::vector<double> ladder_mbps;  // strictly increasing
  // tile_sizes[segment][tile][rung], megabits; non-decreasing in rung
  std::vector<std::vector<std::vector<double>>> tile_sizes;

  int tiles() const { return rows * cols; }
  int rungs() const { return static_cast<int>(ladder_mbps.size()); }

  // Throws std::runtime_error naming the offending field.
  void validate() const;
};

VideoManifest load_manifest(const std::string& path);
void save_manifest(const VideoManifest& m, const std::string& path);

// Synthetic manifest: per-tile sizes are a uniform split of rung * duration
// with seeded multiplicative noise in [0.8, 1.2], renormalized so tiles of a
// segment sum exactly to rung * duration, then clamped monotone in rung.
VideoManifest generate_manifest(uint64_t seed = 7, int rows = 6, int cols = 12,
                                int segments = 60, double segment_duration_s = 1.0,
                                std::vector<double> ladder_mbps = {1.0, 2.5, 5.0, 8.0,
                                                                   16.0, 35.0});

// Total size of a segment under a per-tile rung assignment, megabits.
double segment_size_mb(const VideoManifest& m, int segment,
                       const std::vector<int>& rung_per_tile);

// Size of a tile set downloaded at one rung, megabits.
double region_size_mb(const VideoManifest& m, int segment,
                      const std::vector<int>& region_tiles, int rung);

}  // namespace vstream
