#include "vstream/fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "vstream/manifest.hpp"
#include "vstream/rng.hpp"
#include "vstream/viewpoint.hpp"

namespace vstream {

NetworkTrace generate_synthetic_trace(uint64_t seed, double duration_s, double mean_mbps,
                                      double volatility_mbps) {
  if (duration_s <= 0.0 || mean_mbps <= 0.0)
    throw std::invalid_argument("synthetic trace: duration and mean must be positive");
  Rng rng(seed);
  NetworkTrace tr;
  double level = mean_mbps;
  const int n = static_cast<int>(duration_s) + 1;
  for (int t = 0; t < n; ++t) {
    tr.times_s.push_back(static_cast<double>(t));
    tr.throughput_mbps.push_back(std::max(0.3, level));
    // mean-reverting walk
    level += 0.25 * (mean_mbps - level) + rng.normal() * volatility_mbps;
  }
  tr.validate();
  return tr;
}

std::vector<PredictionSet> generate_oracle_sets(uint64_t seed, int segments, int agents) {
  if (segments < 1 || agents < 1)
    throw std::invalid_argument("oracle sets: segments and agents must be positive");
  Rng rng(seed);
  std::vector<PredictionSet> out;
  // candidate gaze centers drift smoothly so consecutive segments overlap
  std::vector<double> lat(agents), lon(agents);
  for (int i = 0; i < agents; ++i) {
    lat[i] = rng.uniform(-40.0, 40.0);
    lon[i] = rng.uniform(-180.0, 180.0);
  }
  for (int s = 0; s < segments; ++s) {
    PredictionSet set;
    std::vector<double> probs(agents);
    double total = 0.0;
    for (int i = 0; i < agents; ++i) {
      probs[i] = rng.uniform(0.1, 1.0);
      total += probs[i];
    }
    const double mass = rng.uniform(0.7, 0.98);
    for (double& p : probs) p = p / total * mass;
    std::sort(probs.begin(), probs.end(), std::greater<>());
    for (int i = 0; i < agents; ++i) {
      set.probabilities.push_back(probs[i]);
      set.trajectories.push_back({from_lat_lon_deg(lat[i], lon[i])});
      lat[i] = std::clamp(lat[i] + rng.uniform(-8.0, 8.0), -60.0, 60.0);
      lon[i] += rng.uniform(-15.0, 15.0);
      if (lon[i] > 180.0) lon[i] -= 360.0;
      if (lon[i] < -180.0) lon[i] += 360.0;
    }
    set.validate();
    out.push_back(std::move(set));
  }
  return out;
}

void save_oracle_sets(const std::string& path, const std::vector<PredictionSet>& sets) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("oracle sets: cannot write " + path);
  out.precision(17);
  out << "# per segment, one line per trajectory: prob x y z\n";
  for (const auto& set : sets) {
    for (size_t i = 0; i < set.trajectories.size(); ++i) {
      const Vec3& p = set.trajectories[i].front();
      out << set.probabilities[i] << ' ' << p.x << ' ' << p.y << ' ' << p.z << '\n';
    }
  }
}

void generate_fixtures(const std::string& dir, uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::create_directories(dir + "/traces");
  fs::create_directories(dir + "/viewpoints");

  save_manifest(generate_manifest(seed), dir + "/manifest.txt");

  const double means[] = {3.0, 5.0, 8.0, 12.0, 18.0, 25.0, 6.0, 10.0};
  for (int k = 0; k < 8; ++k) {
    const NetworkTrace tr =
        generate_synthetic_trace(seed * 131 + k, 120.0, means[k], 0.25 * means[k]);
    save_trace(tr, dir + "/traces/trace" + std::to_string(k) + ".txt");
  }

  std::vector<Vec3> walk_points;
  for (int k = 0; k < 4; ++k) {
    const ViewpointLog log = generate_viewpoint_log(seed * 977 + k, 120.0, 5.0);
    save_viewpoint_log(log, dir + "/viewpoints/user" + std::to_string(k) + ".txt");
    walk_points.insert(walk_points.end(), log.points.begin(), log.points.end());
  }

  save_oracle_sets(dir + "/oracle_trajectories.txt", generate_oracle_sets(seed * 389, 60, 3));
  save_codebook(kmeans_fit(walk_points, 64, seed * 541), dir + "/codebook.txt");
}

}  // namespace vstream
