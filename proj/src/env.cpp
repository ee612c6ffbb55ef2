#include "vstream/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vstream {

double download_time(double size_mb, const NetworkTrace& trace, double start_s) {
  if (size_mb < 0.0) throw std::invalid_argument("download_time: negative size");
  if (start_s < 0.0) throw std::invalid_argument("download_time: negative start");
  if (size_mb == 0.0) return 0.0;

  const double period = trace.period_s();
  if (!std::isfinite(period))  // constant trace
    return size_mb / trace.throughput_at(start_s);

  const auto& ts = trace.times_s;
  const size_t n = ts.size();
  // locate the starting interval once, then walk boundaries by index so the
  // loop always makes exact progress
  double local = std::fmod(start_s, period);
  size_t idx = 0;
  {
    size_t lo = 0, hi = n - 1;
    while (lo < hi) {
      const size_t mid = (lo + hi + 1) / 2;
      if (ts[mid] <= local)
        lo = mid;
      else
        hi = mid - 1;
    }
    idx = lo;
  }
  double remaining = size_mb;
  double elapsed = 0.0;
  while (true) {
    const double thr = trace.throughput_mbps[idx] + trace.offset_mbps;
    const double interval_end = (idx + 1 < n) ? ts[idx + 1] : period;
    const double dt = interval_end - local;
    const double capacity = thr * dt;
    if (remaining <= capacity) return elapsed + remaining / thr;
    remaining -= capacity;
    elapsed += dt;
    ++idx;
    if (idx == n) idx = 0;
    local = ts[idx];
  }
}

// --- predictors -------------------------------------------------------------

OracleLogPredictor::OracleLogPredictor(const std::string& path, int agents) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("oracle log: cannot open " + path);
  std::vector<double> probs;
  std::vector<Vec3> points;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    double p, x, y, z;
    if (!(ss >> p >> x >> y >> z)) throw std::runtime_error("oracle log: malformed row");
    probs.push_back(p);
    points.push_back(Vec3{x, y, z});
  }
  if (probs.empty() || probs.size() % static_cast<size_t>(agents) != 0)
    throw std::runtime_error("oracle log: row count must be a multiple of the agent count");
  for (size_t off = 0; off < probs.size(); off += agents) {
    PredictionSet set;
    for (int i = 0; i < agents; ++i) {
      set.probabilities.push_back(probs[off + i]);
      set.trajectories.push_back({points[off + i].normalized()});
    }
    set.validate();
    sets_.push_back(std::move(set));
  }
}

PredictionSet OracleLogPredictor::predict(int segment) {
  if (segment < 0) throw std::invalid_argument("oracle log: negative segment");
  return sets_[static_cast<size_t>(segment) % sets_.size()];
}

BaselinePredictor::BaselinePredictor(ViewpointLog log, int agents, double segment_duration_s)
    : log_(std::move(log)), agents_(agents), segment_duration_s_(segment_duration_s) {
  log_.validate();
}

PredictionSet BaselinePredictor::predict(int segment) {
  const Vec3& last = log_.at_or_before(segment * segment_duration_s_);
  return baseline_predict({last}, 1, agents_);
}

ModelPredictor::ModelPredictor(const PredictorConfig& cfg, ViewpointLog log, int agents,
                               double segment_duration_s)
    : model_(cfg.model),
      codebook_(load_codebook(cfg.codebook_path)),
      log_(std::move(log)),
      agents_(agents),
      segment_duration_s_(segment_duration_s) {
  if (codebook_.size() != cfg.model.classes)
    throw std::runtime_error("model predictor: codebook size != model classes");
  model_.load(cfg.checkpoint_path);
  const auto& mc = model_.config();
  zero_frames_.assign(mc.frames, Mat(mc.frame_h, mc.frame_w * mc.frame_c));
}

PredictionSet ModelPredictor::predict(int segment) {
  const auto& mc = model_.config();
  const double now = segment * segment_duration_s_;
  const double rate = log_.sample_rate_hz > 0.0 ? log_.sample_rate_hz : 5.0;
  std::vector<int> history;
  for (int j = mc.history - 1; j >= 0; --j) {
    const Vec3& p = log_.at_or_before(now - j / rate);
    history.push_back(quantize(p, codebook_));
  }
  return model_.predict(zero_frames_, history, agents_, codebook_);
}

std::unique_ptr<ViewpointPredictor> make_predictor(const PredictorConfig& cfg, int agents,
                                                   double segment_duration_s) {
  switch (cfg.kind) {
    case PredictorConfig::Kind::OracleLog:
      return std::make_unique<OracleLogPredictor>(cfg.oracle_log_path, agents);
    case PredictorConfig::Kind::Baseline:
      return std::make_unique<BaselinePredictor>(load_viewpoint_log(cfg.viewpoint_log_path),
                                                 agents, segment_duration_s);
    case PredictorConfig::Kind::Model:
      return std::make_unique<ModelPredictor>(cfg, load_viewpoint_log(cfg.viewpoint_log_path),
                                              agents, segment_duration_s);
  }
  throw std::logic_error("make_predictor: unknown kind");
}

// --- environment ------------------------------------------------------------

void EnvConfig::validate() const {
  manifest.validate();
  trace.validate();
  weights.validate();
  if (agents < 1) throw std::invalid_argument("env config: agents must be >= 1");
  if (history_len < 1) throw std::invalid_argument("env config: history_len must be >= 1");
  if (!(max_buffer_s > manifest.segment_duration_s))
    throw std::invalid_argument("env config: max_buffer_s must exceed the segment duration");
}

Env::Env(EnvConfig cfg) : Env(std::move(cfg), nullptr) {}

Env::Env(EnvConfig cfg, std::unique_ptr<ViewpointPredictor> predictor)
    : cfg_(std::move(cfg)), predictor_(std::move(predictor)) {
  cfg_.validate();
  if (!predictor_)
    predictor_ = make_predictor(cfg_.predictor, cfg_.agents, cfg_.manifest.segment_duration_s);
}

int Env::observation_size() const {
  return 2 * cfg_.history_len + 2 * cfg_.manifest.rungs() + 3;
}

void Env::advance_partition() {
  PredictionSet preds = predictor_->predict(t_);
  if (preds.count() != cfg_.agents)
    throw std::runtime_error("env: predictor returned wrong trajectory count");
  part_ = partition(preds, TileGrid{cfg_.manifest.rows, cfg_.manifest.cols}, cfg_.fov);
  part_.segment = t_;
}

std::vector<Observation> Env::reset() {
  t_ = 0;
  buffer_s_ = 0.0;
  clock_s_ = 0.0;
  dl_hist_.assign(cfg_.history_len, 0.0);
  thr_hist_.assign(cfg_.history_len, 0.0);
  last_rung_.assign(cfg_.agents, 0);
  has_last_rung_ = false;
  prev_q_.clear();
  log_.clear();
  done_ = false;
  advance_partition();
  std::vector<Observation> obs;
  for (int i = 0; i < cfg_.agents; ++i) obs.push_back(observe(i));
  return obs;
}

Observation Env::observe(int agent) const {
  if (agent < 0 || agent >= cfg_.agents) throw std::out_of_range("env: agent out of range");
  const int n = cfg_.manifest.rungs();
  Observation o;
  o.reserve(observation_size());
  // download-time history, seconds / 10
  for (double d : dl_hist_) o.push_back(d / 10.0);
  // throughput history, Mbps / 100
  for (double th : thr_hist_) o.push_back(th / 100.0);
  // candidate region sizes for the segment being decided, Mb / 10
  if (!done_) {
    for (int j = 0; j < n; ++j)
      o.push_back(region_size_mb(cfg_.manifest, t_, part_.regions[agent], j) / 10.0);
  } else {
    for (int j = 0; j < n; ++j) o.push_back(0.0);
  }
  // region viewing probability
  o.push_back(done_ ? 0.0 : part_.probabilities[agent]);
  // remaining segments, normalized by length
  o.push_back(static_cast<double>(cfg_.manifest.segments - t_) / cfg_.manifest.segments);
  // last rung, one-hot (all-zero before the first decision)
  for (int j = 0; j < n; ++j)
    o.push_back(has_last_rung_ && last_rung_[agent] == j ? 1.0 : 0.0);
  // buffer, seconds / 10
  o.push_back(buffer_s_ / 10.0);
  return o;
}

std::vector<double> Env::global_state() const {
  std::vector<double> s;
  s.reserve(static_cast<size_t>(cfg_.agents) * observation_size());
  for (int i = 0; i < cfg_.agents; ++i) {
    const Observation o = observe(i);
    s.insert(s.end(), o.begin(), o.end());
  }
  return s;
}

StepResult Env::step(const std::vector<int>& actions, int rest_rung) {
  if (done_) throw std::logic_error("env: step after episode end");
  if (static_cast<int>(actions.size()) != cfg_.agents)
    throw std::invalid_argument("env: need one action per agent");
  const int n = cfg_.manifest.rungs();
  for (int a : actions)
    if (a < 0 || a >= n) throw std::out_of_range("env: action out of range");
  if (rest_rung < 0 || rest_rung >= n) throw std::out_of_range("env: rest rung out of range");

  const double dt = cfg_.manifest.segment_duration_s;

  // per-tile assignment: region tiles at the agent's rung, rest at rest_rung
  std::vector<int> rung_per_tile(cfg_.manifest.tiles(), rest_rung);
  for (int i = 0; i < cfg_.agents; ++i)
    for (int tile : part_.regions[i]) rung_per_tile[tile] = actions[i];

  const double size = segment_size_mb(cfg_.manifest, t_, rung_per_tile);
  const double dl = download_time(size, cfg_.trace, clock_s_);
  const double reb = rebuffer_time(dl, buffer_s_, dt);

  std::vector<double> q(cfg_.agents);
  for (int i = 0; i < cfg_.agents; ++i) q[i] = cfg_.manifest.ladder_mbps[actions[i]];
  const std::optional<std::vector<double>> qp =
      prev_q_.empty() ? std::nullopt : std::make_optional(prev_q_);
  const QoEBreakdown qoe = qoe_total(cfg_.weights, part_.probabilities, q, qp, reb);

  QoERow row;
  row.segment = t_;
  row.actions = actions;
  row.rest_rung = rest_rung;
  row.psi = part_.probabilities;
  row.quality = q;
  row.qoe = qoe;
  row.buffer_before_s = buffer_s_;
  row.download_s = dl;
  row.rebuffer_s = reb;
  row.size_mb = size;

  // stall consumes trace time; bandwidth is not banked during it
  clock_s_ += dl + reb;
  buffer_s_ = std::min(std::max(buffer_s_ - dl, 0.0) + dt, cfg_.max_buffer_s);
  row.buffer_after_s = buffer_s_;
  log_.push_back(row);

  dl_hist_.erase(dl_hist_.begin());
  dl_hist_.push_back(dl);
  thr_hist_.erase(thr_hist_.begin());
  const double effective_thr = dl > 0.0 ? size / dl : cfg_.trace.throughput_at(clock_s_);
  thr_hist_.push_back(effective_thr);
  prev_q_ = q;
  last_rung_ = actions;
  has_last_rung_ = true;

  ++t_;
  done_ = (t_ == cfg_.manifest.segments);
  if (!done_) advance_partition();

  StepResult res;
  res.reward = qoe.total;
  res.qoe = qoe;
  res.done = done_;
  for (int i = 0; i < cfg_.agents; ++i) res.observations.push_back(observe(i));
  return res;
}

double freeze_frequency(const std::vector<QoERow>& episode_log) {
  if (episode_log.empty()) throw std::invalid_argument("freeze_frequency: empty episode");
  int stalls = 0;
  for (const auto& row : episode_log)
    if (row.rebuffer_s > 0.0) ++stalls;
  return static_cast<double>(stalls) / static_cast<double>(episode_log.size());
}

void write_episode_log(const std::string& path, const std::vector<QoERow>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("episode log: cannot write " + path);
  out.precision(17);
  out << "# segment actions... rest_rung psi... q... qoe1 qoe2 qoe3 qoe4 total "
         "buffer_before buffer_after download_s rebuffer_s size_mb\n";
  for (const auto& r : log) {
    out << r.segment;
    for (int a : r.actions) out << ' ' << a;
    out << ' ' << r.rest_rung;
    for (double p : r.psi) out << ' ' << p;
    for (double q : r.quality) out << ' ' << q;
    out << ' ' << r.qoe.viewport_quality << ' ' << r.qoe.temporal_variation << ' '
        << r.qoe.spatial_variation << ' ' << r.qoe.rebuffer_s << ' ' << r.qoe.total << ' '
        << r.buffer_before_s << ' ' << r.buffer_after_s << ' ' << r.download_s << ' '
        << r.rebuffer_s << ' ' << r.size_mb << '\n';
  }
}

}  // namespace vstream
