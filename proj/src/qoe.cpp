#include "vstream/qoe.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace vstream {

void QoEWeights::validate() const {
  for (double a : {quality, temporal_penalty, spatial_penalty, rebuffer_penalty})
    if (!std::isfinite(a) || a < 0.0)
      throw std::invalid_argument("qoe weights: alphas must be finite and non-negative");
}

QoEWeights QoEWeights::preset(const std::string& name) {
  std::string s;
  for (char c : name)
    if (c != '(' && c != ')' && c != ' ') s.push_back(c);
  std::istringstream ss(s);
  QoEWeights w;
  char comma;
  if (!(ss >> w.quality >> comma >> w.temporal_penalty >> comma >> w.spatial_penalty >> comma >>
        w.rebuffer_penalty) ||
      !ss.eof())
    throw std::invalid_argument("qoe weights: bad preset \"" + name + "\"");
  w.validate();
  return w;
}

std::string QoEWeights::to_string() const {
  std::ostringstream ss;
  ss << quality << ',' << temporal_penalty << ',' << spatial_penalty << ',' << rebuffer_penalty;
  return ss.str();
}

namespace {
void check_lengths(const std::vector<double>& a, const std::vector<double>& b,
                   const char* what) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument(std::string(what) + ": probability/quality lengths must match");
}
}  // namespace

double viewport_quality(const std::vector<double>& psi, const std::vector<double>& quality) {
  check_lengths(psi, quality, "viewport_quality");
  double out = 0.0;
  for (size_t i = 0; i < psi.size(); ++i) out += psi[i] * quality[i];
  return out;
}

double temporal_variation(const std::vector<double>& psi, const std::vector<double>& q_now,
                          const std::vector<double>& q_prev, bool signed_variation) {
  check_lengths(psi, q_now, "temporal_variation");
  check_lengths(psi, q_prev, "temporal_variation");
  double out = 0.0;
  for (size_t i = 0; i < psi.size(); ++i) {
    const double d = q_now[i] - q_prev[i];
    out += psi[i] * (signed_variation ? d : std::abs(d));
  }
  return out;
}

double spatial_variation(const std::vector<double>& psi, const std::vector<double>& quality,
                         bool signed_variation) {
  check_lengths(psi, quality, "spatial_variation");
  double out = 0.0;
  for (size_t i = 0; i < psi.size(); ++i)
    for (size_t j = 0; j < psi.size(); ++j) {
      if (i == j) continue;
      const double d = quality[i] - quality[j];
      out += psi[i] * psi[j] * (signed_variation ? d : std::abs(d));
    }
  return 0.5 * out;
}

double rebuffer_time(double download_time_s, double buffer_s, double segment_duration_s) {
  if (buffer_s < 0.0) throw std::invalid_argument("rebuffer_time: negative buffer");
  return std::max(download_time_s - buffer_s + segment_duration_s, 0.0);
}

QoEBreakdown qoe_total(const QoEWeights& weights, const std::vector<double>& psi,
                       const std::vector<double>& quality,
                       const std::optional<std::vector<double>>& q_prev, double rebuffer_s) {
  weights.validate();
  if (rebuffer_s < 0.0) throw std::invalid_argument("qoe_total: negative rebuffer time");
  QoEBreakdown b;
  b.viewport_quality = viewport_quality(psi, quality);
  b.temporal_variation =
      q_prev ? temporal_variation(psi, quality, *q_prev, weights.signed_variation) : 0.0;
  b.spatial_variation = spatial_variation(psi, quality, weights.signed_variation);
  b.rebuffer_s = rebuffer_s;
  b.total = weights.quality * b.viewport_quality -
            weights.temporal_penalty * b.temporal_variation -
            weights.spatial_penalty * b.spatial_variation -
            weights.rebuffer_penalty * b.rebuffer_s;
  return b;
}

}  // namespace vstream
