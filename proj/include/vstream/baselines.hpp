#pragma once

#include <vector>

#include "vstream/env.hpp"

namespace vstream {

struct BaselineConfig {
  double bb_low_s = 5.0;
  double bb_high_s = 15.0;
  int rb_history = 8;               // throughput samples fed to the harmonic mean
  int mpc_horizon = 5;
  double dynamic_threshold_s = 10.0;

  void validate() const;
};

// Buffer-based rung: lowest below low_s, highest above high_s, linear in
// between (floor-rounded onto the N-1 steps).
int bb_select(double buffer_s, int num_rungs, double low_s = 5.0, double high_s = 15.0);

double harmonic_mean(const std::vector<double>& values);

// Rate-based rung: largest ladder entry at or below the harmonic mean of the
// recent throughputs; zero-valued warm-up entries are ignored.
int rb_select(const std::vector<double>& throughput_history_mbps,
              const std::vector<double>& ladder_mbps);

// Exhaustive lookahead over uniform-across-regions rung sequences under a
// constant predicted throughput; returns the first step of the best sequence,
// ties to the lower rung. Future partitions are approximated by the current
// one; future sizes come from the manifest.
int mpc_select(const Env& env, int horizon, double predicted_throughput_mbps);

// BB when the buffer is above the threshold, RB otherwise (strict inequality).
int dynamic_select(const Env& env, const BaselineConfig& cfg);

}  // namespace vstream
