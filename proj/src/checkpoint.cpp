#include "vstream/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vstream {

void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, const Mat*>>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << "VSTENSOR 1\n" << tensors.size() << '\n';
  uint64_t offset = 0;
  for (const auto& [name, mat] : tensors) {
    if (name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("checkpoint: tensor name contains whitespace: " + name);
    out << name << ' ' << mat->rows << ' ' << mat->cols << ' ' << offset << '\n';
    offset += static_cast<uint64_t>(mat->v.size());
  }
  out << "DATA\n";
  for (const auto& [name, mat] : tensors) {
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(mat->v.data()),
              static_cast<std::streamsize>(mat->v.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::map<std::string, Mat> load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "VSTENSOR" || version != 1)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  size_t count = 0;
  if (!(in >> count)) throw std::runtime_error("checkpoint: bad tensor count");

  struct Entry {
    std::string name;
    int rows, cols;
    uint64_t offset;
  };
  std::vector<Entry> entries(count);
  for (auto& e : entries) {
    if (!(in >> e.name >> e.rows >> e.cols >> e.offset))
      throw std::runtime_error("checkpoint: truncated index");
    if (e.rows < 0 || e.cols < 0) throw std::runtime_error("checkpoint: bad shape for " + e.name);
  }
  std::string data_tag;
  if (!(in >> data_tag) || data_tag != "DATA")
    throw std::runtime_error("checkpoint: missing DATA marker");
  char nl;
  in.get(nl);  // newline after DATA

  const std::streampos data_start = in.tellg();
  std::map<std::string, Mat> out;
  for (const auto& e : entries) {
    Mat m(e.rows, e.cols);
    in.seekg(data_start + static_cast<std::streamoff>(e.offset * sizeof(double)));
    in.read(reinterpret_cast<char*>(m.v.data()),
            static_cast<std::streamsize>(m.v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated payload for " + e.name);
    out.emplace(e.name, std::move(m));
  }
  return out;
}

}  // namespace vstream
