#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vstream/vec3.hpp"

namespace vstream {

// Timestamped gaze directions on the unit sphere.
struct ViewpointLog {
  std::vector<double> times_s;  // strictly increasing
  std::vector<Vec3> points;     // unit norm within 1e-9
  double sample_rate_hz = 0.0;

  void validate() const;
  size_t samples() const { return times_s.size(); }
  // last sample with time <= t (first sample for t before the log starts)
  const Vec3& at_or_before(double t_s) const;
};

ViewpointLog load_viewpoint_log(const std::string& path);
void save_viewpoint_log(const ViewpointLog& log, const std::string& path);

// Seeded great-circle walk with occasional speed jumps; stands in for real
// head-movement captures.
ViewpointLog generate_viewpoint_log(uint64_t seed, double duration_s,
                                    double sample_rate_hz = 5.0);

}  // namespace vstream
