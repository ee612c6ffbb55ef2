#pragma once

#include <cmath>
#include <stdexcept>

namespace vstream {

// Point on (or near) the unit sphere; gaze directions live here.
struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }

  Vec3 normalized() const {
    const double n = norm();
    if (n == 0.0) throw std::domain_error("cannot normalize zero vector");
    return {x / n, y / n, z / n};
  }
};

inline bool is_unit(const Vec3& v, double tol = 1e-6) {
  return std::abs(v.norm() - 1.0) <= tol;
}

// Convention: lon 0 / lat 0 maps to +x, lon 90 to +y, the north pole to +z.
inline Vec3 from_lat_lon_deg(double lat_deg, double lon_deg) {
  const double d2r = 0.017453292519943295;
  const double lat = lat_deg * d2r, lon = lon_deg * d2r;
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

inline void to_lat_lon_deg(const Vec3& v, double& lat_deg, double& lon_deg) {
  const double r2d = 57.29577951308232;
  const Vec3 u = v.normalized();
  lat_deg = std::asin(std::min(1.0, std::max(-1.0, u.z))) * r2d;
  lon_deg = std::atan2(u.y, u.x) * r2d;
}

}  // namespace vstream
