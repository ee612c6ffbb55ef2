#include "vstream/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "vstream/rng.hpp"

namespace vstream {

void Codebook::validate() const {
  if (centroids.empty()) throw std::runtime_error("codebook: empty");
  for (const auto& c : centroids)
    if (std::abs(c.norm() - 1.0) > 1e-9)
      throw std::runtime_error("codebook: centroid not unit norm");
  for (size_t i = 0; i < centroids.size(); ++i)
    for (size_t j = i + 1; j < centroids.size(); ++j)
      if ((centroids[i] - centroids[j]).norm() <= 1e-9)
        throw std::runtime_error("codebook: duplicate centroids");
}

void PredictionSet::validate() const {
  if (trajectories.size() != probabilities.size())
    throw std::runtime_error("prediction set: trajectory/probability count mismatch");
  double sum = 0.0;
  for (size_t i = 0; i < probabilities.size(); ++i) {
    if (!(probabilities[i] > 0.0))
      throw std::runtime_error("prediction set: probabilities must be strictly positive");
    if (i > 0 && probabilities[i] > probabilities[i - 1] + 1e-12)
      throw std::runtime_error("prediction set: probabilities not sorted descending");
    sum += probabilities[i];
  }
  if (sum > 1.0 + 1e-9) throw std::runtime_error("prediction set: probabilities sum above 1");
  for (const auto& traj : trajectories)
    for (const auto& p : traj)
      if (std::abs(p.norm() - 1.0) > 1e-9)
        throw std::runtime_error("prediction set: point not unit norm");
}

double great_circle_distance(const Vec3& a, const Vec3& b) {
  if (!is_unit(a) || !is_unit(b))
    throw std::invalid_argument("great_circle_distance: inputs must be unit vectors");
  const double d = std::min(1.0, std::max(-1.0, a.dot(b)));
  return std::acos(d);
}

double avg_great_circle_distance(const std::vector<Vec3>& pred,
                                 const std::vector<Vec3>& truth) {
  if (pred.empty() || pred.size() != truth.size())
    throw std::invalid_argument("avg_great_circle_distance: trajectories must have equal nonzero length");
  double sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) sum += great_circle_distance(pred[i], truth[i]);
  return sum / static_cast<double>(pred.size());
}

double best_of_many(const PredictionSet& preds, const std::vector<Vec3>& truth) {
  if (preds.trajectories.empty()) throw std::invalid_argument("best_of_many: no candidates");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& traj : preds.trajectories)
    best = std::min(best, avg_great_circle_distance(traj, truth));
  return best;
}

Codebook kmeans_fit(const std::vector<Vec3>& points, int k, uint64_t seed,
                    std::vector<double>* inertia_trace) {
  if (points.empty()) throw std::invalid_argument("kmeans: empty input");
  if (k <= 0) throw std::invalid_argument("kmeans: k must be positive");
  if (static_cast<int>(points.size()) < k)
    throw std::invalid_argument("kmeans: fewer points than clusters");
  for (const auto& p : points)
    if (!is_unit(p, 1e-6)) throw std::invalid_argument("kmeans: point not unit norm");

  Rng rng(seed);
  // seed centroids with k distinct input points (distinct positions when possible)
  Codebook cb;
  {
    std::vector<int> order(points.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    for (int idx : order) {
      bool dup = false;
      for (const auto& c : cb.centroids)
        if ((c - points[idx]).norm() <= 1e-12) { dup = true; break; }
      if (!dup) cb.centroids.push_back(points[idx].normalized());
      if (cb.size() == k) break;
    }
    // fewer distinct positions than k: fall back to random directions
    while (cb.size() < k) {
      Vec3 c{rng.normal(), rng.normal(), rng.normal()};
      if (c.norm() < 1e-9) continue;
      cb.centroids.push_back(c.normalized());
    }
  }

  std::vector<int> assign(points.size(), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < points.size(); ++i) {
      const int a = quantize(points[i], cb);
      if (a != assign[i]) { assign[i] = a; changed = true; }
    }
    if (inertia_trace) inertia_trace->push_back(kmeans_inertia(points, cb));
    if (!changed) break;

    std::vector<Vec3> sums(k, Vec3{0, 0, 0});
    std::vector<int> counts(k, 0);
    for (size_t i = 0; i < points.size(); ++i) {
      sums[assign[i]] = sums[assign[i]] + points[i];
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      // empty cluster keeps its previous centroid
      if (counts[c] > 0 && sums[c].norm() > 1e-12) cb.centroids[c] = sums[c].normalized();
    }
  }
  return cb;
}

double kmeans_inertia(const std::vector<Vec3>& points, const Codebook& cb) {
  double total = 0.0;
  for (const auto& p : points) {
    const Vec3 d = p - cb.centroids[quantize(p, cb)];
    total += d.dot(d);
  }
  return total;
}

int quantize(const Vec3& point, const Codebook& cb) {
  if (cb.centroids.empty()) throw std::invalid_argument("quantize: empty codebook");
  if (!is_unit(point, 1e-6)) throw std::invalid_argument("quantize: point not unit norm");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cb.size(); ++i) {
    const Vec3 d = point - cb.centroids[i];
    const double dist = d.dot(d);
    if (dist < best_d) { best_d = dist; best = i; }
  }
  return best;
}

PredictionSet baseline_predict(const std::vector<Vec3>& history, int horizon,
                               int num_trajectories) {
  if (history.empty()) throw std::invalid_argument("baseline_predict: empty history");
  if (horizon <= 0 || num_trajectories <= 0)
    throw std::invalid_argument("baseline_predict: horizon and count must be positive");
  PredictionSet out;
  const Vec3 last = history.back().normalized();
  out.trajectories.assign(num_trajectories, std::vector<Vec3>(horizon, last));
  out.probabilities.assign(num_trajectories, 1.0 / num_trajectories);
  out.validate();
  return out;
}

Codebook load_codebook(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("codebook: cannot open " + path);
  int k = 0;
  if (!(in >> k) || k <= 0) throw std::runtime_error("codebook: bad size line");
  Codebook cb;
  for (int i = 0; i < k; ++i) {
    double x, y, z;
    if (!(in >> x >> y >> z)) throw std::runtime_error("codebook: truncated centroid list");
    cb.centroids.push_back(Vec3{x, y, z});
  }
  cb.validate();
  return cb;
}

void save_codebook(const Codebook& cb, const std::string& path) {
  cb.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("codebook: cannot write " + path);
  out.precision(17);
  out << cb.size() << '\n';
  for (const auto& c : cb.centroids) out << c.x << ' ' << c.y << ' ' << c.z << '\n';
}

}  // namespace vstream
