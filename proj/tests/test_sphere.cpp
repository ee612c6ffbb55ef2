#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "vstream/rng.hpp"
#include "vstream/sphere.hpp"

using namespace vstream;

namespace {
Vec3 random_unit(Rng& rng) {
  while (true) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    if (v.norm() > 1e-6) return v.normalized();
  }
}
}  // namespace

TEST_CASE("great circle distance basics") {
  const Vec3 x{1, 0, 0}, y{0, 1, 0};
  CHECK(great_circle_distance(x, x) == 0.0);
  CHECK(great_circle_distance(x, y) == doctest::Approx(M_PI / 2));
  CHECK(great_circle_distance(x, Vec3{-1, 0, 0}) == doctest::Approx(M_PI));
  CHECK_THROWS_AS(great_circle_distance(Vec3{2, 0, 0}, x), std::invalid_argument);
}

TEST_CASE("great circle distance is symmetric, bounded, zero iff equal") {
  Rng rng(10);
  for (int i = 0; i < 300; ++i) {
    const Vec3 a = random_unit(rng), b = random_unit(rng);
    const double d = great_circle_distance(a, b);
    CHECK(d == great_circle_distance(b, a));
    CHECK(d >= 0.0);
    CHECK(d <= M_PI);
    if ((a - b).norm() > 1e-6) CHECK(d > 0.0);
  }
}

TEST_CASE("average great circle distance") {
  const Vec3 x{1, 0, 0}, y{0, 1, 0}, z{0, 0, 1};
  CHECK(avg_great_circle_distance({x, y, z}, {x, y, z}) == 0.0);
  CHECK(avg_great_circle_distance({x, y, z}, {y, z, x}) == doctest::Approx(M_PI / 2));
  // 3-step mixed case: hand arccos of the dot products
  const Vec3 d = Vec3{1, 1, 0}.normalized();
  const std::vector<Vec3> pred{x, x, x}, truth{x, d, y};
  const double expect = (std::acos(1.0) + std::acos(d.x) + std::acos(0.0)) / 3.0;
  CHECK(avg_great_circle_distance(pred, truth) == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(avg_great_circle_distance({x}, {x, y}), std::invalid_argument);
}

TEST_CASE("best of many takes the minimum candidate error") {
  const Vec3 x{1, 0, 0}, y{0, 1, 0}, z{0, 0, 1};
  PredictionSet one;
  one.trajectories = {{y, y}};
  one.probabilities = {1.0};
  CHECK(best_of_many(one, {x, x}) ==
        doctest::Approx(avg_great_circle_distance({y, y}, {x, x})));

  PredictionSet several;
  several.trajectories = {{x, x}, {y, y}, {z, z}};
  several.probabilities = {0.5, 0.3, 0.2};
  CHECK(best_of_many(several, {x, x}) == 0.0);

  // three candidates with distinct errors: brute-force minimum
  const std::vector<Vec3> truth{x, y};
  double best = 1e9;
  for (const auto& traj : several.trajectories)
    best = std::min(best, avg_great_circle_distance(traj, truth));
  CHECK(best_of_many(several, truth) == doctest::Approx(best));
}

TEST_CASE("best of many is non-increasing as candidates are appended") {
  Rng rng(77);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<Vec3> truth;
    for (int i = 0; i < 4; ++i) truth.push_back(random_unit(rng));
    PredictionSet preds;
    double last = 1e300;
    for (int i = 0; i < 5; ++i) {
      std::vector<Vec3> cand;
      for (int j = 0; j < 4; ++j) cand.push_back(random_unit(rng));
      preds.trajectories.push_back(cand);
      preds.probabilities.assign(preds.trajectories.size(),
                                 1.0 / preds.trajectories.size());
      const double now = best_of_many(preds, truth);
      CHECK(now <= last + 1e-15);
      last = now;
    }
  }
}

TEST_CASE("kmeans: one centroid is the normalized mean") {
  Rng rng(5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 40; ++i) pts.push_back(random_unit(rng));
  const Codebook cb = kmeans_fit(pts, 1, 3);
  Vec3 mean{0, 0, 0};
  for (const auto& p : pts) mean = mean + p;
  const Vec3 expect = mean.normalized();
  CHECK(cb.centroids[0].x == doctest::Approx(expect.x).epsilon(1e-12));
  CHECK(cb.centroids[0].y == doctest::Approx(expect.y).epsilon(1e-12));
  CHECK(cb.centroids[0].z == doctest::Approx(expect.z).epsilon(1e-12));
}

TEST_CASE("kmeans: k equal to distinct points fits exactly") {
  std::vector<Vec3> pts{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, 0, 0}, {0, -1, 0}};
  const Codebook cb = kmeans_fit(pts, 5, 9);
  CHECK(kmeans_inertia(pts, cb) == doctest::Approx(0.0));
  for (const auto& p : pts) {
    const int idx = quantize(p, cb);
    CHECK((cb.centroids[idx] - p).norm() < 1e-12);
  }
}

TEST_CASE("kmeans determinism and inertia monotonicity") {
  Rng rng(21);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(random_unit(rng));

  const Codebook a = kmeans_fit(pts, 8, 1234);
  const Codebook b = kmeans_fit(pts, 8, 1234);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.centroids[i].x == b.centroids[i].x);
    CHECK(a.centroids[i].y == b.centroids[i].y);
    CHECK(a.centroids[i].z == b.centroids[i].z);
  }

  std::vector<double> inertia;
  kmeans_fit(pts, 8, 77, &inertia);
  REQUIRE(inertia.size() >= 2);
  for (size_t i = 1; i < inertia.size(); ++i) CHECK(inertia[i] <= inertia[i - 1] + 1e-12);

  CHECK_THROWS_AS(kmeans_fit({}, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(kmeans_fit(pts, 0, 0), std::invalid_argument);
}

TEST_CASE("quantize: ties break to the lowest index and metrics agree") {
  // indices 2 and 7 are mirror images across x = y, so the midpoint compares
  // bit-identically against both
  Codebook cb;
  cb.centroids = {{0, 0, 1},  {0, 0, -1}, {1, 0, 0},  {-1, 0, 0},
                  {0, -1, 0}, {-0.6, -0.8, 0}, {0, -0.8, 0.6}, {0, 1, 0}};
  for (auto& c : cb.centroids) c = c.normalized();
  cb.validate();

  CHECK(quantize(cb.centroids[5], cb) == 5);
  const Vec3 mid = Vec3{1, 1, 0}.normalized();
  const double d2 = (mid - cb.centroids[2]).norm();
  const double d7 = (mid - cb.centroids[7]).norm();
  REQUIRE(d2 == d7);
  CHECK(quantize(mid, cb) == 2);

  // chord argmin equals arc argmin
  Rng rng(99);
  for (int iter = 0; iter < 300; ++iter) {
    const Vec3 p = random_unit(rng);
    int chord_best = 0, arc_best = 0;
    double chord_d = 1e300, arc_d = 1e300;
    for (int i = 0; i < cb.size(); ++i) {
      const double cd = (p - cb.centroids[i]).norm();
      const double ad = great_circle_distance(p, cb.centroids[i]);
      if (cd < chord_d) { chord_d = cd; chord_best = i; }
      if (ad < arc_d) { arc_d = ad; arc_best = i; }
    }
    CHECK(chord_best == arc_best);
    CHECK(quantize(p, cb) == chord_best);
  }
}

TEST_CASE("quantizing a centroid returns its own index") {
  Rng rng(31);
  std::vector<Vec3> pts;
  for (int i = 0; i < 120; ++i) pts.push_back(random_unit(rng));
  const Codebook cb = kmeans_fit(pts, 12, 55);
  for (int i = 0; i < cb.size(); ++i) CHECK(quantize(cb.centroids[i], cb) == i);
}

TEST_CASE("baseline predictor repeats the last point") {
  const Vec3 p = Vec3{0.3, -0.4, 0.87}.normalized();
  const PredictionSet out = baseline_predict({Vec3{1, 0, 0}, p}, 5, 3);
  REQUIRE(out.count() == 3);
  for (const auto& traj : out.trajectories) {
    REQUIRE(traj.size() == 5);
    for (const auto& q : traj) CHECK((q - p).norm() < 1e-12);
  }
  for (double prob : out.probabilities) CHECK(prob == doctest::Approx(1.0 / 3));
  CHECK(best_of_many(out, std::vector<Vec3>(5, p)) == 0.0);
  CHECK_THROWS_AS(baseline_predict({}, 5, 3), std::invalid_argument);
}

TEST_CASE("codebook file round trip") {
  Rng rng(3);
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(random_unit(rng));
  const Codebook cb = kmeans_fit(pts, 6, 17);
  save_codebook(cb, "test_codebook_tmp.txt");
  const Codebook back = load_codebook("test_codebook_tmp.txt");
  REQUIRE(back.size() == cb.size());
  for (int i = 0; i < cb.size(); ++i) CHECK((back.centroids[i] - cb.centroids[i]).norm() < 1e-15);
  std::remove("test_codebook_tmp.txt");
}
