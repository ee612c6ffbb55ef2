#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vstream/vec3.hpp"

namespace vstream {

// K-means centroid codebook on the unit sphere; turns viewpoint regression
// into K-way classification.
struct Codebook {
  std::vector<Vec3> centroids;  // unit norm, pairwise distinct

  int size() const { return static_cast<int>(centroids.size()); }
  void validate() const;
};

// I candidate future trajectories with viewing probabilities, sorted by
// probability descending.
struct PredictionSet {
  std::vector<std::vector<Vec3>> trajectories;  // I x B unit vectors
  std::vector<double> probabilities;            // strictly positive, descending, sum <= 1

  int count() const { return static_cast<int>(trajectories.size()); }
  void validate() const;
};

// arc length between unit vectors, radians in [0, pi]
double great_circle_distance(const Vec3& a, const Vec3& b);

double avg_great_circle_distance(const std::vector<Vec3>& pred,
                                 const std::vector<Vec3>& truth);

// best-of-many-samples: minimum average error over the candidate trajectories
double best_of_many(const PredictionSet& preds, const std::vector<Vec3>& truth);

// Lloyd's algorithm in R^3 with centroids renormalized to the sphere each
// iteration; stops when assignments stabilize or after 100 iterations.
Codebook kmeans_fit(const std::vector<Vec3>& points, int k, uint64_t seed,
                    std::vector<double>* inertia_trace = nullptr);

// sum of squared chord distances to the nearest centroid
double kmeans_inertia(const std::vector<Vec3>& points, const Codebook& cb);

// nearest centroid by Euclidean (equivalently arc) distance; ties -> lowest index
int quantize(const Vec3& point, const Codebook& cb);

// Last observed point repeated over the horizon, duplicated I times with
// uniform probabilities.
PredictionSet baseline_predict(const std::vector<Vec3>& history, int horizon,
                               int num_trajectories);

Codebook load_codebook(const std::string& path);
void save_codebook(const Codebook& cb, const std::string& path);

}  // namespace vstream
