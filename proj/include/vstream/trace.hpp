#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vstream {

// Throughput log, step-interpolated (sample-and-hold). The additive offset is
// applied lazily at query time. Traces loop: sample i holds over
// [t_i, t_{i+1}); the final sample holds for the length of the preceding
// interval, after which the trace restarts at time 0. A single-sample trace
// is constant forever.
struct NetworkTrace {
  std::vector<double> times_s;         // strictly increasing, first sample at 0
  std::vector<double> throughput_mbps; // raw values, offset not included
  double offset_mbps = 0.0;

  void validate() const;
  size_t samples() const { return times_s.size(); }
  // looping period; +inf for a single-sample trace
  double period_s() const;
  // offset-adjusted throughput at wall time t (t >= 0), right-continuous step
  double throughput_at(double t_s) const;
};

NetworkTrace load_trace(const std::string& path, double offset_mbps = 0.0);
void save_trace(const NetworkTrace& tr, const std::string& path);

NetworkTrace make_trace(std::vector<double> times_s, std::vector<double> throughput_mbps,
                        double offset_mbps = 0.0);
NetworkTrace make_constant_trace(double throughput_mbps);

}  // namespace vstream
