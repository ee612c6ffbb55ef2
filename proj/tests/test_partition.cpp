#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "vstream/partition.hpp"
#include "vstream/rng.hpp"

using namespace vstream;

namespace {
const TileGrid kGrid{6, 12};
const Fov kFov{100.0, 100.0};

PredictionSet make_preds(const std::vector<Vec3>& points, std::vector<double> probs) {
  PredictionSet ps;
  for (const auto& p : points) ps.trajectories.push_back({p.normalized()});
  ps.probabilities = std::move(probs);
  return ps;
}
}  // namespace

TEST_CASE("center viewpoint covers the 16 central tiles") {
  const auto tiles = viewport_tiles(Vec3{1, 0, 0}, kGrid, kFov);
  // rows 1..4 x cols 4..7 of the 6x12 grid, enumerated by hand
  std::vector<int> expect;
  for (int r = 1; r <= 4; ++r)
    for (int c = 4; c <= 7; ++c) expect.push_back(r * 12 + c);
  CHECK(tiles == expect);
}

TEST_CASE("full-sphere FOV selects every tile") {
  const auto tiles = viewport_tiles(Vec3{0, 0, 1}, kGrid, Fov{360.0, 180.0});
  CHECK(static_cast<int>(tiles.size()) == kGrid.tiles());
}

TEST_CASE("FOV bounds are enforced") {
  CHECK_THROWS_AS(viewport_tiles(Vec3{1, 0, 0}, kGrid, Fov{0.0, 90.0}), std::invalid_argument);
  CHECK_THROWS_AS(viewport_tiles(Vec3{1, 0, 0}, kGrid, Fov{90.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(viewport_tiles(Vec3{1, 0, 0}, kGrid, Fov{90.0, 181.0}), std::invalid_argument);
  CHECK_THROWS_AS(viewport_tiles(Vec3{1, 0, 0}, kGrid, Fov{361.0, 90.0}), std::invalid_argument);
  CHECK_THROWS_AS(viewport_tiles(Vec3{2, 0, 0}, kGrid, kFov), std::invalid_argument);
}

TEST_CASE("footprint wraps across the antimeridian") {
  // lon 180 is 6 columns away from lon 0; the footprint must be the center
  // footprint rotated by 6 columns, wrapping through column 0
  const auto center = viewport_tiles(from_lat_lon_deg(0.0, 0.0), kGrid, kFov);
  const auto wrapped = viewport_tiles(from_lat_lon_deg(0.0, 180.0), kGrid, kFov);
  std::set<int> expect;
  for (int t : center) {
    const int row = t / 12, col = t % 12;
    expect.insert(row * 12 + (col + 6) % 12);
  }
  CHECK(std::set<int>(wrapped.begin(), wrapped.end()) == expect);

  // same equality for a viewpoint near the seam at an odd offset
  for (int k = 1; k <= 11; ++k) {
    const auto rotated = viewport_tiles(from_lat_lon_deg(0.0, -180.0 + 30.0 * k), kGrid, kFov);
    std::set<int> shifted;
    for (int t : wrapped) {
      const int row = t / 12, col = t % 12;
      shifted.insert(row * 12 + (col + k) % 12);
    }
    CHECK(std::set<int>(rotated.begin(), rotated.end()) == shifted);
  }
}

TEST_CASE("footprints match the degree-space enumeration oracle on random viewpoints") {
  Rng rng(404);
  for (int iter = 0; iter < 500; ++iter) {
    const double lat = rng.uniform(-90.0, 90.0);
    const double lon = rng.uniform(-180.0, 180.0);
    const auto got = viewport_tiles(from_lat_lon_deg(lat, lon), kGrid, kFov);
    const auto expect = oracle::fov_tiles_enumerated(lat, lon, 6, 12, 100.0, 100.0);
    CHECK(got == expect);
  }
}

TEST_CASE("partition: non-overlapping viewpoints keep both footprints intact") {
  const auto preds =
      make_preds({from_lat_lon_deg(0.0, 0.0), from_lat_lon_deg(0.0, 180.0)}, {0.6, 0.4});
  const RegionAssignment part = partition(preds, kGrid, kFov);
  part.validate(kGrid.tiles());
  CHECK(part.regions[0].size() == 16);
  CHECK(part.regions[1].size() == 16);
  CHECK(part.rest.size() == 72 - 32);
}

TEST_CASE("partition: identical viewpoints assign the overlap to the higher probability") {
  const auto preds = make_preds({Vec3{1, 0, 0}, Vec3{1, 0, 0}}, {0.6, 0.4});
  const RegionAssignment part = partition(preds, kGrid, kFov);
  CHECK(part.regions[0].size() == 16);
  CHECK(part.regions[1].empty());
}

TEST_CASE("partition: three regions, overlap between 2 and 3 goes to region 2") {
  // region 1 sits on the far side so only regions 2 and 3 overlap
  const auto preds = make_preds({from_lat_lon_deg(0.0, -120.0), from_lat_lon_deg(0.0, 60.0),
                                 from_lat_lon_deg(0.0, 90.0)},
                                {0.5, 0.3, 0.2});
  const RegionAssignment part = partition(preds, kGrid, kFov);
  part.validate(kGrid.tiles());
  const auto fp2 = viewport_tiles(from_lat_lon_deg(0.0, 60.0), kGrid, kFov);
  const auto fp3 = viewport_tiles(from_lat_lon_deg(0.0, 90.0), kGrid, kFov);
  std::set<int> overlap;
  std::set<int> fp3_set(fp3.begin(), fp3.end());
  for (int t : fp2)
    if (fp3_set.count(t)) overlap.insert(t);
  REQUIRE(!overlap.empty());
  const std::set<int> r2(part.regions[1].begin(), part.regions[1].end());
  const std::set<int> r3(part.regions[2].begin(), part.regions[2].end());
  for (int t : overlap) {
    CHECK(r2.count(t) == 1);
    CHECK(r3.count(t) == 0);
  }
}

TEST_CASE("partition requires descending probabilities") {
  auto preds = make_preds({Vec3{1, 0, 0}, Vec3{0, 1, 0}}, {0.3, 0.6});
  CHECK_THROWS_AS(partition(preds, kGrid, kFov), std::runtime_error);
}

TEST_CASE("randomized partitions are exact and priority-ordered") {
  Rng rng(7070);
  for (int iter = 0; iter < 2000; ++iter) {
    const int agents = 1 + rng.uniform_int(4);
    std::vector<Vec3> pts;
    std::vector<double> probs;
    double mass = 0.0;
    for (int i = 0; i < agents; ++i) {
      pts.push_back(from_lat_lon_deg(rng.uniform(-90.0, 90.0), rng.uniform(-180.0, 180.0)));
      probs.push_back(rng.uniform(0.05, 1.0));
      mass += probs.back();
    }
    for (double& p : probs) p /= mass;
    std::sort(probs.begin(), probs.end(), std::greater<>());
    const auto preds = make_preds(pts, probs);
    const RegionAssignment part = partition(preds, kGrid, kFov);
    part.validate(kGrid.tiles());

    // priority: a tile of region j is in no earlier footprint
    std::vector<std::set<int>> footprints;
    for (const auto& traj : preds.trajectories) {
      const auto fp = viewport_tiles(traj.front(), kGrid, kFov);
      footprints.emplace_back(fp.begin(), fp.end());
    }
    for (size_t j = 0; j < part.regions.size(); ++j)
      for (int t : part.regions[j]) {
        CHECK(footprints[j].count(t) == 1);
        for (size_t i = 0; i < j; ++i) CHECK(footprints[i].count(t) == 0);
      }
    // rest is exactly the complement of the union
    std::set<int> uni;
    for (const auto& fp : footprints) uni.insert(fp.begin(), fp.end());
    CHECK(part.rest.size() + uni.size() == static_cast<size_t>(kGrid.tiles()));
  }
}

TEST_CASE("equal probabilities break ties by input order") {
  const auto preds = make_preds({Vec3{1, 0, 0}, Vec3{1, 0, 0}}, {0.5, 0.5});
  const RegionAssignment part = partition(preds, kGrid, kFov);
  CHECK(part.regions[0].size() == 16);
  CHECK(part.regions[1].empty());
}
