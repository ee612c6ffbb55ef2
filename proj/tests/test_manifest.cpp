#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "vstream/manifest.hpp"
#include "vstream/rng.hpp"

using namespace vstream;

TEST_CASE("default generator produces the 6x12 grid with 72 tiles") {
  const VideoManifest m = generate_manifest(7, 6, 12, 10);
  CHECK(m.tiles() == 72);
  CHECK(m.rungs() == 6);
  CHECK(m.segments == 10);
  m.validate();
}

TEST_CASE("generated sizes average to the nominal per-tile split") {
  const VideoManifest m = generate_manifest(7, 6, 12, 10);
  for (int t = 0; t < m.segments; ++t)
    for (int j = 0; j < m.rungs(); ++j) {
      double mean = 0.0;
      for (int i = 0; i < m.tiles(); ++i) mean += m.tile_sizes[t][i][j];
      mean /= m.tiles();
      const double nominal = m.ladder_mbps[j] * m.segment_duration_s / m.tiles();
      CHECK(mean * m.tiles() == doctest::Approx(m.ladder_mbps[j] * m.segment_duration_s)
                                    .epsilon(0.01));
      CHECK(mean == doctest::Approx(nominal).epsilon(0.01));
    }
}

TEST_CASE("non-monotone ladder is rejected") {
  VideoManifest m = generate_manifest(7, 2, 2, 1);
  m.ladder_mbps = {5.0, 2.0, 8.0, 9.0, 10.0, 11.0};
  CHECK_THROWS_WITH_AS(m.validate(), "manifest: ladder not increasing", std::runtime_error);
}

TEST_CASE("segment size sums tile sizes") {
  const VideoManifest m = generate_manifest(7, 6, 12, 3);
  SUBCASE("uniform rung equals ladder times duration by construction") {
    for (int j = 0; j < m.rungs(); ++j) {
      const std::vector<int> uniform(m.tiles(), j);
      CHECK(segment_size_mb(m, 1, uniform) ==
            doctest::Approx(m.ladder_mbps[j] * m.segment_duration_s).epsilon(1e-9));
    }
  }
  SUBCASE("hand-built manifest sums exactly") {
    VideoManifest tiny;
    tiny.rows = 1;
    tiny.cols = 72;
    tiny.segments = 1;
    tiny.segment_duration_s = 1.0;
    tiny.ladder_mbps = {1.0};
    tiny.tile_sizes.assign(1, std::vector<std::vector<double>>(72, {0.1}));
    tiny.validate();
    CHECK(segment_size_mb(tiny, 0, std::vector<int>(72, 0)) == doctest::Approx(7.2));
  }
  SUBCASE("single tile manifest returns that tile's entry") {
    VideoManifest one;
    one.rows = one.cols = 1;
    one.segments = 1;
    one.segment_duration_s = 1.0;
    one.ladder_mbps = {1.0, 2.0};
    one.tile_sizes = {{{0.4, 0.9}}};
    one.validate();
    CHECK(segment_size_mb(one, 0, {1}) == 0.9);
  }
  SUBCASE("changing one tile's rung changes the size by that tile's delta") {
    std::vector<int> a(m.tiles(), 2), b(m.tiles(), 2);
    b[17] = 4;
    const double delta = segment_size_mb(m, 1, b) - segment_size_mb(m, 1, a);
    CHECK(delta == doctest::Approx(m.tile_sizes[1][17][4] - m.tile_sizes[1][17][2]).epsilon(1e-12));
  }
  SUBCASE("index errors") {
    CHECK_THROWS_AS(segment_size_mb(m, 99, std::vector<int>(m.tiles(), 0)), std::out_of_range);
    CHECK_THROWS_AS(segment_size_mb(m, 0, std::vector<int>(3, 0)), std::invalid_argument);
    CHECK_THROWS_AS(segment_size_mb(m, 0, std::vector<int>(m.tiles(), 9)), std::out_of_range);
  }
}

TEST_CASE("region sizes add over disjoint regions and empty region is zero") {
  const VideoManifest m = generate_manifest(11, 6, 12, 2);
  CHECK(region_size_mb(m, 0, {}, 3) == 0.0);

  const std::vector<int> uniform(m.tiles(), 2);
  std::vector<int> all(m.tiles());
  for (int i = 0; i < m.tiles(); ++i) all[i] = i;
  CHECK(region_size_mb(m, 0, all, 2) == doctest::Approx(segment_size_mb(m, 0, uniform)));

  Rng rng(5);
  for (int iter = 0; iter < 20; ++iter) {
    std::vector<int> a, b;
    for (int i = 0; i < m.tiles(); ++i) (rng.uniform() < 0.5 ? a : b).push_back(i);
    double brute = 0.0;
    for (int i : a) brute += m.tile_sizes[1][i][4];
    for (int i : b) brute += m.tile_sizes[1][i][4];
    CHECK(region_size_mb(m, 1, a, 4) + region_size_mb(m, 1, b, 4) ==
          doctest::Approx(brute).epsilon(1e-12));
    CHECK(region_size_mb(m, 1, a, 4) + region_size_mb(m, 1, b, 4) ==
          doctest::Approx(region_size_mb(m, 1, all, 4)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(region_size_mb(m, 0, {999}, 0), std::out_of_range);
}

TEST_CASE("segment size partitions over random region splits and is monotone in rungs") {
  const VideoManifest m = generate_manifest(3, 6, 12, 2);
  Rng rng(42);
  for (int iter = 0; iter < 50; ++iter) {
    // random exact partition into three sets, each at its own rung
    std::vector<std::vector<int>> parts(3);
    for (int i = 0; i < m.tiles(); ++i) parts[rng.uniform_int(3)].push_back(i);
    std::vector<int> assign(m.tiles(), 0);
    std::vector<int> rungs{rng.uniform_int(6), rng.uniform_int(6), rng.uniform_int(6)};
    for (int p = 0; p < 3; ++p)
      for (int tile : parts[p]) assign[tile] = rungs[p];
    double sum = 0.0;
    for (int p = 0; p < 3; ++p) sum += region_size_mb(m, 0, parts[p], rungs[p]);
    CHECK(sum == doctest::Approx(segment_size_mb(m, 0, assign)).epsilon(1e-12));

    // raising one tile's rung never shrinks the segment
    const int tile = rng.uniform_int(m.tiles());
    if (assign[tile] + 1 < m.rungs()) {
      std::vector<int> raised = assign;
      ++raised[tile];
      CHECK(segment_size_mb(m, 0, raised) >= segment_size_mb(m, 0, assign));
    }
  }
}

TEST_CASE("manifest file round trip and parse errors") {
  const VideoManifest m = generate_manifest(7, 4, 6, 3, 2.0, {1.0, 3.0, 6.0});
  const std::string path = "test_manifest_roundtrip.txt";
  save_manifest(m, path);
  const VideoManifest back = load_manifest(path);
  CHECK(back.rows == m.rows);
  CHECK(back.segment_duration_s == m.segment_duration_s);
  REQUIRE(back.tile_sizes.size() == m.tile_sizes.size());
  CHECK(back.tile_sizes[2][5][1] == m.tile_sizes[2][5][1]);
  std::remove(path.c_str());

  {
    std::ofstream bad("test_manifest_bad.txt");
    bad << "2 2 1 1.0\n5 2 8\n";  // decreasing ladder
    for (int i = 0; i < 4; ++i) bad << "1 2 3\n";
  }
  CHECK_THROWS_WITH_AS(load_manifest("test_manifest_bad.txt"),
                       "manifest: ladder not increasing", std::runtime_error);
  std::remove("test_manifest_bad.txt");
  CHECK_THROWS_AS(load_manifest("no_such_manifest.txt"), std::runtime_error);
}
