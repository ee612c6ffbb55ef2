#include "vstream/viewpoint.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vstream/rng.hpp"

namespace vstream {

void ViewpointLog::validate() const {
  if (times_s.empty()) throw std::runtime_error("viewpoint log: no samples");
  if (times_s.size() != points.size())
    throw std::runtime_error("viewpoint log: times/points length mismatch");
  for (size_t i = 0; i + 1 < times_s.size(); ++i)
    if (!(times_s[i] < times_s[i + 1]))
      throw std::runtime_error("viewpoint log: timestamps not strictly increasing");
  for (const auto& p : points)
    if (std::abs(p.norm() - 1.0) > 1e-9)
      throw std::runtime_error("viewpoint log: point not unit norm");
}

const Vec3& ViewpointLog::at_or_before(double t_s) const {
  if (times_s.empty()) throw std::runtime_error("viewpoint log: empty");
  size_t lo = 0, hi = times_s.size() - 1;
  if (t_s <= times_s[0]) return points[0];
  while (lo < hi) {
    const size_t mid = (lo + hi + 1) / 2;
    if (times_s[mid] <= t_s)
      lo = mid;
    else
      hi = mid - 1;
  }
  return points[lo];
}

ViewpointLog load_viewpoint_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("viewpoint log: cannot open " + path);
  ViewpointLog log;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    double t, x, y, z;
    if (!(ss >> t >> x >> y >> z))
      throw std::runtime_error("viewpoint log: malformed row in " + path);
    log.times_s.push_back(t);
    log.points.push_back(Vec3{x, y, z});
  }
  if (log.times_s.size() >= 2)
    log.sample_rate_hz = 1.0 / (log.times_s[1] - log.times_s[0]);
  log.validate();
  return log;
}

void save_viewpoint_log(const ViewpointLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("viewpoint log: cannot write " + path);
  out.precision(17);
  out << "# time_s x y z\n";
  for (size_t i = 0; i < log.times_s.size(); ++i)
    out << log.times_s[i] << ' ' << log.points[i].x << ' ' << log.points[i].y << ' '
        << log.points[i].z << '\n';
}

ViewpointLog generate_viewpoint_log(uint64_t seed, double duration_s, double sample_rate_hz) {
  if (duration_s <= 0.0 || sample_rate_hz <= 0.0)
    throw std::invalid_argument("viewpoint log: duration and rate must be positive");
  Rng rng(seed);
  ViewpointLog log;
  log.sample_rate_hz = sample_rate_hz;

  Vec3 pos = from_lat_lon_deg(rng.uniform(-45.0, 45.0), rng.uniform(-180.0, 180.0));
  // tangent direction
  Vec3 ref = std::abs(pos.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  Vec3 dir = pos.cross(ref).normalized();

  const double dt = 1.0 / sample_rate_hz;
  double speed_rad_s = rng.uniform(0.1, 0.6);
  int jump_steps = 0;
  const int n = static_cast<int>(std::floor(duration_s * sample_rate_hz)) + 1;
  for (int i = 0; i < n; ++i) {
    log.times_s.push_back(i * dt);
    log.points.push_back(pos.normalized());

    // occasional burst of fast movement
    if (jump_steps == 0 && rng.uniform() < 0.05) {
      jump_steps = 2 + rng.uniform_int(4);
      speed_rad_s = rng.uniform(1.0, 3.0);
    } else if (jump_steps > 0 && --jump_steps == 0) {
      speed_rad_s = rng.uniform(0.1, 0.6);
    }

    // advance along the great circle spanned by (pos, dir)
    const double ang = speed_rad_s * dt;
    const Vec3 next = (pos * std::cos(ang) + dir * std::sin(ang)).normalized();
    const Vec3 next_dir = (dir * std::cos(ang) - pos * std::sin(ang)).normalized();
    pos = next;
    dir = next_dir;
    // small heading drift
    const double drift = rng.normal() * 0.15;
    const Vec3 side = pos.cross(dir).normalized();
    dir = (dir * std::cos(drift) + side * std::sin(drift)).normalized();
    // keep dir tangent
    dir = (dir - pos * dir.dot(pos)).normalized();
  }
  log.validate();
  return log;
}

}  // namespace vstream
