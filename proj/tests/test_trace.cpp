#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "oracles.hpp"
#include "vstream/env.hpp"
#include "vstream/rng.hpp"
#include "vstream/trace.hpp"

using namespace vstream;

namespace {
NetworkTrace write_and_load(const std::string& body, double offset) {
  const std::string path = "test_trace_tmp.txt";
  {
    std::ofstream out(path);
    out << body;
  }
  NetworkTrace tr = load_trace(path, offset);
  std::remove(path.c_str());
  return tr;
}
}  // namespace

TEST_CASE("constant trace with 3 Mbps enlargement") {
  const NetworkTrace tr = write_and_load("# capture\n0 5\n", 3.0);
  CHECK(tr.throughput_at(0.0) == 8.0);
  CHECK(tr.throughput_at(17.3) == 8.0);
}

TEST_CASE("zero offset is the identity") {
  const NetworkTrace tr = write_and_load("0 5\n2 7\n", 0.0);
  CHECK(tr.throughput_at(0.5) == 5.0);
  CHECK(tr.throughput_at(2.5) == 7.0);
}

TEST_CASE("step lookup is right-continuous sample-and-hold") {
  const NetworkTrace tr = make_trace({0.0, 10.0}, {2.0, 6.0});
  CHECK(tr.throughput_at(0.0) == 2.0);
  CHECK(tr.throughput_at(9.999) == 2.0);
  CHECK(tr.throughput_at(10.0) == 6.0);
  CHECK(tr.throughput_at(15.0) == 6.0);
  // wraps after the final sample has held for the previous interval length
  CHECK(tr.period_s() == 20.0);
  CHECK(tr.throughput_at(20.0) == 2.0);
}

TEST_CASE("trace validation errors") {
  CHECK_THROWS_AS(write_and_load("0 5\n0 6\n", 0.0), std::runtime_error);   // not increasing
  CHECK_THROWS_AS(write_and_load("1 5\n2 6\n", 0.0), std::runtime_error);   // must start at 0
  CHECK_THROWS_AS(write_and_load("0 5\nbad row\n", 0.0), std::runtime_error);
  CHECK_THROWS_AS(write_and_load("0 2\n1 -3\n", 0.0), std::runtime_error);  // offset underflow
  CHECK_THROWS_AS(load_trace("no_such_trace.txt"), std::runtime_error);
}

TEST_CASE("download time on constant and piecewise traces") {
  CHECK(download_time(5.0, make_constant_trace(10.0), 0.0) == doctest::Approx(0.5));
  CHECK(download_time(0.0, make_constant_trace(10.0), 3.0) == 0.0);

  // 8 Mb over {0 -> 2 Mbps, 2 s -> 6 Mbps}: 4 Mb in the first 2 s, then 4 Mb at 6
  const NetworkTrace steps = make_trace({0.0, 2.0}, {2.0, 6.0});
  CHECK(download_time(8.0, steps, 0.0) == doctest::Approx(2.0 + 2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("download time matches the integral-bisection oracle on random step traces") {
  Rng rng(303);
  for (int iter = 0; iter < 100; ++iter) {
    const int n = 1 + rng.uniform_int(6);
    std::vector<double> times{0.0}, thr;
    for (int i = 1; i < n; ++i) times.push_back(times.back() + rng.uniform(0.2, 3.0));
    for (int i = 0; i < n; ++i) thr.push_back(rng.uniform(0.5, 20.0));
    const NetworkTrace tr = make_trace(times, thr, rng.uniform(0.0, 3.0));
    const double size = rng.uniform(0.05, 80.0);
    const double start = rng.uniform(0.0, 12.0);
    const double got = download_time(size, tr, start);
    const double expect = oracle::download_time_bisection(size, tr, start);
    CHECK(got == doctest::Approx(expect).epsilon(1e-9));
    // the delivered megabits at the returned time equal the requested size
    CHECK(oracle::trace_integral(tr, start, got) == doctest::Approx(size).epsilon(1e-9));
  }
}

TEST_CASE("trace exhaustion loops from the start") {
  const NetworkTrace tr = make_trace({0.0, 1.0}, {1.0, 3.0});  // period 2 s, 4 Mb per cycle
  // two full cycles deliver 8 Mb in 4 s; the ninth megabit arrives at 1 Mbps
  CHECK(download_time(9.0, tr, 0.0) == doctest::Approx(5.0));
}

TEST_CASE("trace file round trip") {
  const NetworkTrace tr = make_trace({0.0, 1.5, 4.0}, {3.0, 1.25, 9.5}, 0.0);
  save_trace(tr, "test_trace_roundtrip.txt");
  const NetworkTrace back = load_trace("test_trace_roundtrip.txt", 0.0);
  CHECK(back.times_s == tr.times_s);
  CHECK(back.throughput_mbps == tr.throughput_mbps);
  std::remove("test_trace_roundtrip.txt");
}
