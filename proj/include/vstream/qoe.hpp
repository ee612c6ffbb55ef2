#pragma once

#include <optional>
#include <string>
#include <vector>

namespace vstream {

// Weighting of the four QoE terms. signed_variation reproduces the literal
// signed differences of the printed variation terms (the signed spatial term
// cancels to zero identically); the default uses absolute differences.
struct QoEWeights {
  double quality = 1.0;             // alpha1
  double temporal_penalty = 1.0;    // alpha2
  double spatial_penalty = 1.0;     // alpha3
  double rebuffer_penalty = 1.0;    // alpha4
  bool signed_variation = false;

  void validate() const;
  // presets: "1,1,1,1", "1,2,1,1", "1,1,2,1", "1,1,1,2" (parentheses allowed)
  static QoEWeights preset(const std::string& name);
  std::string to_string() const;
};

struct QoEBreakdown {
  double viewport_quality = 0.0;    // Mbps
  double temporal_variation = 0.0;  // Mbps
  double spatial_variation = 0.0;   // Mbps
  double rebuffer_s = 0.0;          // seconds
  double total = 0.0;
};

// weighted average quality of the viewport regions
double viewport_quality(const std::vector<double>& psi, const std::vector<double>& quality);

// probability-weighted quality change per region against the previous segment
double temporal_variation(const std::vector<double>& psi, const std::vector<double>& q_now,
                          const std::vector<double>& q_prev, bool signed_variation = false);

// pairwise quality difference between regions, halved to count each pair once
double spatial_variation(const std::vector<double>& psi, const std::vector<double>& quality,
                         bool signed_variation = false);

// max(download_time - buffer + segment duration, 0)
double rebuffer_time(double download_time_s, double buffer_s, double segment_duration_s);

// Composes the four terms; q_prev == nullopt means first segment (temporal
// variation zero by convention).
QoEBreakdown qoe_total(const QoEWeights& weights, const std::vector<double>& psi,
                       const std::vector<double>& quality,
                       const std::optional<std::vector<double>>& q_prev, double rebuffer_s);

}  // namespace vstream
