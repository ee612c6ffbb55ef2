#pragma once

// Independent test oracles. Everything here recomputes expected values from
// first principles and must stay decoupled from the implementation paths it
// checks.

#include <algorithm>
#include <cmath>
#include <vector>

#include "vstream/qoe.hpp"
#include "vstream/trace.hpp"

namespace oracle {

// weighted QoE recomputed with plain loops
inline double qoe_reference(const vstream::QoEWeights& w, const std::vector<double>& psi,
                            const std::vector<double>& q, const std::vector<double>* q_prev,
                            double rebuffer_s) {
  const size_t n = psi.size();
  double q1 = 0.0;
  for (size_t i = 0; i < n; ++i) q1 += psi[i] * q[i];
  double q2 = 0.0;
  if (q_prev)
    for (size_t i = 0; i < n; ++i) q2 += psi[i] * std::abs(q[i] - (*q_prev)[i]);
  double q3 = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) q3 += psi[i] * psi[j] * std::abs(q[i] - q[j]);
  return w.quality * q1 - w.temporal_penalty * q2 - w.spatial_penalty * q3 -
         w.rebuffer_penalty * rebuffer_s;
}

// suffix sums evaluated term by term
inline std::vector<double> returns_brute_force(const std::vector<double>& rewards,
                                               double bootstrap, double gamma) {
  const int n = static_cast<int>(rewards.size());
  std::vector<double> out(n, 0.0);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int i = t; i < n; ++i) acc += std::pow(gamma, i - t) * rewards[i];
    acc += std::pow(gamma, n - t) * bootstrap;
    out[t] = acc;
  }
  return out;
}

// double sum over discounted TD residuals
inline std::vector<double> gae_brute_force(const std::vector<double>& rewards,
                                           const std::vector<double>& values, double bootstrap,
                                           double gamma, double lambda) {
  const int n = static_cast<int>(rewards.size());
  std::vector<double> out(n, 0.0);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int l = 0; t + l < n; ++l) {
      const double next = (t + l + 1 < n) ? values[t + l + 1] : bootstrap;
      const double delta = rewards[t + l] + gamma * next - values[t + l];
      acc += std::pow(gamma * lambda, l) * delta;
    }
    out[t] = acc;
  }
  return out;
}

// forward piecewise integral of the wrapped step trace over [start, start+tau]
inline double trace_integral(const vstream::NetworkTrace& tr, double start, double tau) {
  const double period = tr.period_s();
  if (!std::isfinite(period)) return tr.throughput_at(0.0) * tau;
  const size_t n = tr.times_s.size();
  double local = std::fmod(start, period);
  size_t idx = n - 1;
  while (idx > 0 && tr.times_s[idx] > local) --idx;
  double acc = 0.0, left = tau;
  while (left > 0.0) {
    const double end = (idx + 1 < n) ? tr.times_s[idx + 1] : period;
    const double dt = std::min(end - local, left);
    acc += (tr.throughput_mbps[idx] + tr.offset_mbps) * dt;
    left -= dt;
    ++idx;
    if (idx == n) idx = 0;
    local = tr.times_s[idx];
  }
  return acc;
}

// invert the integral by bisection
inline double download_time_bisection(double size_mb, const vstream::NetworkTrace& tr,
                                      double start) {
  if (size_mb <= 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (trace_integral(tr, start, hi) < size_mb) hi *= 2.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (trace_integral(tr, start, mid) < size_mb)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// tiles whose lat/lon box intersects the FOV box, enumerated directly in
// degree space (longitude tested with explicit +-360 shifts)
inline std::vector<int> fov_tiles_enumerated(double lat_deg, double lon_deg, int rows, int cols,
                                             double fov_h, double fov_v) {
  std::vector<int> out;
  const double lat_lo = std::max(-90.0, lat_deg - fov_v / 2.0);
  const double lat_hi = std::min(90.0, lat_deg + fov_v / 2.0);
  for (int r = 0; r < rows; ++r) {
    const double t_hi = 90.0 - r * (180.0 / rows);
    const double t_lo = t_hi - 180.0 / rows;
    if (!(std::max(lat_lo, t_lo) < std::min(lat_hi, t_hi))) continue;
    for (int c = 0; c < cols; ++c) {
      const double a = -180.0 + c * (360.0 / cols);
      const double b = a + 360.0 / cols;
      bool hit = fov_h >= 360.0;
      for (int s = -1; s <= 1 && !hit; ++s) {
        const double lo = lon_deg - fov_h / 2.0 + 360.0 * s;
        const double hi = lon_deg + fov_h / 2.0 + 360.0 * s;
        hit = std::max(lo, a) < std::min(hi, b);
      }
      if (hit) out.push_back(r * cols + c);
    }
  }
  return out;
}

}  // namespace oracle
