#include "vstream/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vstream {

void BaselineConfig::validate() const {
  if (!(bb_low_s < bb_high_s))
    throw std::invalid_argument("baseline config: bb_low_s must be below bb_high_s");
  if (rb_history < 1) throw std::invalid_argument("baseline config: rb_history must be >= 1");
  if (mpc_horizon < 1) throw std::invalid_argument("baseline config: mpc_horizon must be >= 1");
}

int bb_select(double buffer_s, int num_rungs, double low_s, double high_s) {
  if (buffer_s < 0.0) throw std::invalid_argument("bb_select: negative buffer");
  if (num_rungs < 1) throw std::invalid_argument("bb_select: no rungs");
  if (!(low_s < high_s)) throw std::invalid_argument("bb_select: low_s must be below high_s");
  if (buffer_s < low_s) return 0;
  if (buffer_s > high_s) return num_rungs - 1;
  const int rung = static_cast<int>(
      std::floor((buffer_s - low_s) / (high_s - low_s) * (num_rungs - 1)));
  return std::clamp(rung, 0, num_rungs - 1);
}

double harmonic_mean(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("harmonic_mean: empty input");
  double denom = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw std::invalid_argument("harmonic_mean: values must be positive");
    denom += 1.0 / v;
  }
  return static_cast<double>(values.size()) / denom;
}

int rb_select(const std::vector<double>& throughput_history_mbps,
              const std::vector<double>& ladder_mbps) {
  if (throughput_history_mbps.empty())
    throw std::invalid_argument("rb_select: empty throughput history");
  std::vector<double> usable;
  for (double v : throughput_history_mbps)
    if (v > 0.0) usable.push_back(v);
  if (usable.empty()) return 0;  // warm-up
  const double predicted = harmonic_mean(usable);
  int rung = 0;
  bool found = false;
  for (size_t j = 0; j < ladder_mbps.size(); ++j)
    if (ladder_mbps[j] <= predicted) {
      rung = static_cast<int>(j);
      found = true;
    }
  return found ? rung : 0;
}

int mpc_select(const Env& env, int horizon, double predicted_throughput_mbps) {
  if (horizon < 1) throw std::invalid_argument("mpc_select: horizon must be >= 1");
  if (!(predicted_throughput_mbps > 0.0))
    throw std::invalid_argument("mpc_select: predicted throughput must be positive");

  const VideoManifest& m = env.manifest();
  const int n = m.rungs();
  const int t0 = env.segment_cursor();
  const int steps = std::min(horizon, m.segments - t0);
  if (steps <= 0) throw std::logic_error("mpc_select: no segments left");

  const RegionAssignment& part = env.current_partition();
  const double dt = m.segment_duration_s;
  const double cap = env.config().max_buffer_s;
  const QoEWeights& weights = env.config().weights;

  // per (lookahead step, rung) download size with the rest region at rung 0
  std::vector<std::vector<double>> size_at(steps, std::vector<double>(n, 0.0));
  for (int h = 0; h < steps; ++h) {
    const int seg = t0 + h;
    const double rest = region_size_mb(m, seg, part.rest, 0);
    for (int r = 0; r < n; ++r) {
      double s = rest;
      for (const auto& region : part.regions) s += region_size_mb(m, seg, region, r);
      size_at[h][r] = s;
    }
  }

  const std::vector<double> first_prev = env.prev_quality();
  std::vector<int> combo(steps, 0);
  double best_score = -1e300;
  int best_first = 0;

  // odometer with the first step most significant: lexicographic order makes
  // strict improvement resolve ties to the lower rung
  while (true) {
    double score = 0.0;
    double buffer = env.buffer_s();
    std::vector<double> prev = first_prev;
    for (int h = 0; h < steps; ++h) {
      const int rung = combo[h];
      const double dl = size_at[h][rung] / predicted_throughput_mbps;
      const double reb = rebuffer_time(dl, buffer, dt);
      buffer = std::min(std::max(buffer - dl, 0.0) + dt, cap);
      const std::vector<double> q(part.probabilities.size(), m.ladder_mbps[rung]);
      const std::optional<std::vector<double>> qp =
          prev.empty() ? std::nullopt : std::make_optional(prev);
      score += qoe_total(weights, part.probabilities, q, qp, reb).total;
      prev = q;
    }
    if (score > best_score) {
      best_score = score;
      best_first = combo[0];
    }
    // increment from the last (least significant) position
    int pos = steps - 1;
    while (pos >= 0 && ++combo[pos] == n) {
      combo[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return best_first;
}

int dynamic_select(const Env& env, const BaselineConfig& cfg) {
  cfg.validate();
  if (env.buffer_s() > cfg.dynamic_threshold_s)
    return bb_select(env.buffer_s(), env.manifest().rungs(), cfg.bb_low_s, cfg.bb_high_s);
  std::vector<double> history = env.throughput_history();
  if (static_cast<int>(history.size()) > cfg.rb_history)
    history.erase(history.begin(), history.end() - cfg.rb_history);
  return rb_select(history, env.manifest().ladder_mbps);
}

}  // namespace vstream
