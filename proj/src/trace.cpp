#include "vstream/trace.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace vstream {

void NetworkTrace::validate() const {
  if (times_s.empty()) throw std::runtime_error("trace: no samples");
  if (times_s.size() != throughput_mbps.size())
    throw std::runtime_error("trace: times/throughput length mismatch");
  if (times_s.front() != 0.0) throw std::runtime_error("trace: first sample must be at time 0");
  for (size_t i = 0; i + 1 < times_s.size(); ++i) {
    if (!(times_s[i] < times_s[i + 1]))
      throw std::runtime_error("trace: timestamps not strictly increasing");
  }
  for (double v : throughput_mbps) {
    if (!std::isfinite(v) || !(v + offset_mbps > 0.0))
      throw std::runtime_error("trace: throughput + offset must be positive at every sample");
  }
}

double NetworkTrace::period_s() const {
  const size_t n = times_s.size();
  if (n <= 1) return std::numeric_limits<double>::infinity();
  return times_s[n - 1] + (times_s[n - 1] - times_s[n - 2]);
}

double NetworkTrace::throughput_at(double t_s) const {
  if (t_s < 0.0) throw std::invalid_argument("trace: negative query time");
  const size_t n = times_s.size();
  if (n == 1) return throughput_mbps[0] + offset_mbps;
  double local = std::fmod(t_s, period_s());
  // binary search for the last sample with time <= local
  size_t lo = 0, hi = n - 1;
  while (lo < hi) {
    const size_t mid = (lo + hi + 1) / 2;
    if (times_s[mid] <= local)
      lo = mid;
    else
      hi = mid - 1;
  }
  return throughput_mbps[lo] + offset_mbps;
}

NetworkTrace load_trace(const std::string& path, double offset_mbps) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace: cannot open " + path);
  NetworkTrace tr;
  tr.offset_mbps = offset_mbps;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    double t, v;
    if (!(ss >> t >> v)) throw std::runtime_error("trace: malformed row in " + path);
    tr.times_s.push_back(t);
    tr.throughput_mbps.push_back(v);
  }
  tr.validate();
  return tr;
}

void save_trace(const NetworkTrace& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot write " + path);
  out.precision(17);
  out << "# time_s throughput_mbps\n";
  for (size_t i = 0; i < tr.times_s.size(); ++i)
    out << tr.times_s[i] << ' ' << tr.throughput_mbps[i] << '\n';
}

NetworkTrace make_trace(std::vector<double> times_s, std::vector<double> throughput_mbps,
                        double offset_mbps) {
  NetworkTrace tr;
  tr.times_s = std::move(times_s);
  tr.throughput_mbps = std::move(throughput_mbps);
  tr.offset_mbps = offset_mbps;
  tr.validate();
  return tr;
}

NetworkTrace make_constant_trace(double throughput_mbps) {
  return make_trace({0.0}, {throughput_mbps}, 0.0);
}

}  // namespace vstream
