#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vstream {

// dense row-major matrix of doubles
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative shape");
  }

  static Mat row_vector(std::vector<double> vals) {
    Mat m;
    m.rows = 1;
    m.cols = static_cast<int>(vals.size());
    m.v = std::move(vals);
    return m;
  }

  double& operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

  int size() const { return rows * cols; }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);

}  // namespace vstream
