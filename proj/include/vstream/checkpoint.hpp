#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vstream/mat.hpp"

namespace vstream {

// Flat binary tensor container with a text index. Layout:
//   line 1: "VSTENSOR 1"
//   line 2: tensor count
//   per tensor: "<name> <rows> <cols> <offset>"  (offset in doubles from DATA)
//   line: "DATA"
//   raw little-endian float64 payload, tensors concatenated row-major
// Names must not contain whitespace.
void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, const Mat*>>& tensors);

std::map<std::string, Mat> load_tensors(const std::string& path);

}  // namespace vstream
