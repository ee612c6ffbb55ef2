#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vstream/sphere.hpp"
#include "vstream/trace.hpp"

namespace vstream {

// Seeded synthetic throughput trace: mean-reverting random walk sampled once
// per second, floored at 0.3 Mbps.
NetworkTrace generate_synthetic_trace(uint64_t seed, double duration_s, double mean_mbps,
                                      double volatility_mbps);

// Scripted multi-trajectory predictions: one first-of-segment viewpoint per
// agent per segment, probabilities positive, descending, summing below 1.
std::vector<PredictionSet> generate_oracle_sets(uint64_t seed, int segments, int agents);

void save_oracle_sets(const std::string& path, const std::vector<PredictionSet>& sets);

// Writes the default fixture tree:
//   <dir>/manifest.txt            6x12 grid, 6 rungs, 60 segments
//   <dir>/traces/trace<k>.txt     8 synthetic traces
//   <dir>/viewpoints/user<k>.txt  4 synthetic viewpoint logs
//   <dir>/oracle_trajectories.txt 3-agent scripted predictions
//   <dir>/codebook.txt            64 centroids fit on synthetic walks
void generate_fixtures(const std::string& dir, uint64_t seed = 7);

}  // namespace vstream
