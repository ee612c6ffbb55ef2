#include "vstream/manifest.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vstream/rng.hpp"

namespace vstream {

namespace {

// strips comments, skips blank lines
bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i < line.size()) return true;
  }
  return false;
}

std::vector<double> parse_doubles(const std::string& line, const std::string& what) {
  std::istringstream ss(line);
  std::vector<double> out;
  double v;
  while (ss >> v) out.push_back(v);
  if (!ss.eof()) throw std::runtime_error("manifest: bad number in " + what);
  return out;
}

}  // namespace

void VideoManifest::validate() const {
  if (rows <= 0 || cols <= 0) throw std::runtime_error("manifest: rows*cols must be positive");
  if (segments <= 0) throw std::runtime_error("manifest: segments must be positive");
  if (segment_duration_s <= 0.0)
    throw std::runtime_error("manifest: segment_duration_s must be positive");
  if (ladder_mbps.empty()) throw std::runtime_error("manifest: ladder is empty");
  for (size_t j = 0; j + 1 < ladder_mbps.size(); ++j) {
    if (!(ladder_mbps[j] < ladder_mbps[j + 1]))
      throw std::runtime_error("manifest: ladder not increasing");
  }
  if (ladder_mbps.front() <= 0.0) throw std::runtime_error("manifest: ladder entries must be positive");
  if (static_cast<int>(tile_sizes.size()) != segments)
    throw std::runtime_error("manifest: tile_sizes segment count mismatch");
  for (const auto& seg : tile_sizes) {
    if (static_cast<int>(seg.size()) != tiles())
      throw std::runtime_error("manifest: tile_sizes tile count mismatch");
    for (const auto& tile : seg) {
      if (tile.size() != ladder_mbps.size())
        throw std::runtime_error("manifest: tile_sizes rung count mismatch");
      for (size_t j = 0; j < tile.size(); ++j) {
        if (!(tile[j] > 0.0) || !std::isfinite(tile[j]))
          throw std::runtime_error("manifest: tile_sizes entry must be positive");
        if (j > 0 && tile[j] < tile[j - 1])
          throw std::runtime_error("manifest: tile_sizes not monotone in rung");
      }
    }
  }
}

VideoManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open " + path);

  VideoManifest m;
  std::string line;
  if (!next_data_line(in, line)) throw std::runtime_error("manifest: missing header line");
  {
    std::istringstream ss(line);
    if (!(ss >> m.rows >> m.cols >> m.segments >> m.segment_duration_s))
      throw std::runtime_error("manifest: bad header line (rows cols segments duration_s)");
  }
  if (m.rows <= 0 || m.cols <= 0 || m.segments <= 0)
    throw std::runtime_error("manifest: rows*cols must be positive");

  if (!next_data_line(in, line)) throw std::runtime_error("manifest: missing ladder line");
  m.ladder_mbps = parse_doubles(line, "ladder");

  m.tile_sizes.assign(m.segments, std::vector<std::vector<double>>(m.tiles()));
  for (int t = 0; t < m.segments; ++t) {
    for (int tile = 0; tile < m.tiles(); ++tile) {
      if (!next_data_line(in, line))
        throw std::runtime_error("manifest: truncated tile_sizes at segment " + std::to_string(t));
      auto sizes = parse_doubles(line, "tile_sizes");
      if (sizes.size() != m.ladder_mbps.size())
        throw std::runtime_error("manifest: tile_sizes rung count mismatch");
      m.tile_sizes[t][tile] = std::move(sizes);
    }
  }
  m.validate();
  return m;
}

void save_manifest(const VideoManifest& m, const std::string& path) {
  m.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  out.precision(17);
  out << m.rows << ' ' << m.cols << ' ' << m.segments << ' ' << m.segment_duration_s << '\n';
  for (size_t j = 0; j < m.ladder_mbps.size(); ++j)
    out << (j ? " " : "") << m.ladder_mbps[j];
  out << '\n';
  for (int t = 0; t < m.segments; ++t)
    for (int tile = 0; tile < m.tiles(); ++tile) {
      const auto& sizes = m.tile_sizes[t][tile];
      for (size_t j = 0; j < sizes.size(); ++j) out << (j ? " " : "") << sizes[j];
      out << '\n';
    }
}

VideoManifest generate_manifest(uint64_t seed, int rows, int cols, int segments,
                                double segment_duration_s, std::vector<double> ladder_mbps) {
  VideoManifest m;
  m.rows = rows;
  m.cols = cols;
  m.segments = segments;
  m.segment_duration_s = segment_duration_s;
  m.ladder_mbps = std::move(ladder_mbps);

  Rng rng(seed);
  const int tiles = m.tiles();
  const int rungs = m.rungs();
  m.tile_sizes.assign(segments, std::vector<std::vector<double>>(
                                    tiles, std::vector<double>(rungs, 0.0)));
  std::vector<double> noise(tiles);
  for (int t = 0; t < segments; ++t) {
    for (int j = 0; j < rungs; ++j) {
      double sum = 0.0;
      for (int i = 0; i < tiles; ++i) {
        noise[i] = rng.uniform(0.8, 1.2);
        sum += noise[i];
      }
      // renormalize so the segment total at a uniform rung is exact
      const double nominal = m.ladder_mbps[j] * segment_duration_s / tiles;
      const double scale = tiles / sum;
      for (int i = 0; i < tiles; ++i) {
        double size = nominal * noise[i] * scale;
        if (j > 0 && size < m.tile_sizes[t][i][j - 1]) size = m.tile_sizes[t][i][j - 1];
        m.tile_sizes[t][i][j] = size;
      }
    }
  }
  m.validate();
  return m;
}

double segment_size_mb(const VideoManifest& m, int segment,
                       const std::vector<int>& rung_per_tile) {
  if (segment < 0 || segment >= m.segments)
    throw std::out_of_range("segment_size: segment index out of range");
  if (static_cast<int>(rung_per_tile.size()) != m.tiles())
    throw std::invalid_argument("segment_size: assignment length must equal tile count");
  double total = 0.0;
  for (int i = 0; i < m.tiles(); ++i) {
    const int r = rung_per_tile[i];
    if (r < 0 || r >= m.rungs()) throw std::out_of_range("segment_size: rung out of range");
    total += m.tile_sizes[segment][i][r];
  }
  return total;
}

double region_size_mb(const VideoManifest& m, int segment,
                      const std::vector<int>& region_tiles, int rung) {
  if (segment < 0 || segment >= m.segments)
    throw std::out_of_range("region_size: segment index out of range");
  if (rung < 0 || rung >= m.rungs()) throw std::out_of_range("region_size: rung out of range");
  double total = 0.0;
  for (int tile : region_tiles) {
    if (tile < 0 || tile >= m.tiles()) throw std::out_of_range("region_size: tile out of range");
    total += m.tile_sizes[segment][tile][rung];
  }
  return total;
}

}  // namespace vstream
