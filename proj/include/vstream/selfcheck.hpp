#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vstream {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Randomized oracle suites over the core arithmetic: QoE recomputation,
// return/GAE brute force, download-time inversion, partition exactness, and a
// finite-difference gradient check.
std::vector<CheckResult> run_self_checks(uint64_t seed);

}  // namespace vstream
