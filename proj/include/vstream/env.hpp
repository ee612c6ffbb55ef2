#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vstream/attention.hpp"
#include "vstream/manifest.hpp"
#include "vstream/partition.hpp"
#include "vstream/qoe.hpp"
#include "vstream/sphere.hpp"
#include "vstream/trace.hpp"
#include "vstream/viewpoint.hpp"

namespace vstream {

// Wall seconds to fetch size_mb starting at start_s, inverting the step-trace
// integral exactly. The trace loops when exhausted (see NetworkTrace).
double download_time(double size_mb, const NetworkTrace& trace, double start_s);

// Per-segment source of multi-viewpoint predictions.
class ViewpointPredictor {
 public:
  virtual ~ViewpointPredictor() = default;
  virtual PredictionSet predict(int segment) = 0;
};

struct PredictorConfig {
  enum class Kind { OracleLog, Baseline, Model };
  Kind kind = Kind::Baseline;
  std::string oracle_log_path;     // OracleLog: fixture replayed per segment
  std::string viewpoint_log_path;  // Baseline / Model: true trajectory source
  std::string checkpoint_path;     // Model
  std::string codebook_path;       // Model
  AttentionConfig model;           // Model: architecture of the checkpoint
};

// Scripted fixture: per segment, I lines of "prob x y z" (first viewpoint of
// the segment). Fixtures shorter than the video repeat from the start.
class OracleLogPredictor : public ViewpointPredictor {
 public:
  OracleLogPredictor(const std::string& path, int agents);
  PredictionSet predict(int segment) override;
  int scripted_segments() const { return static_cast<int>(sets_.size()); }

 private:
  std::vector<PredictionSet> sets_;
};

class BaselinePredictor : public ViewpointPredictor {
 public:
  BaselinePredictor(ViewpointLog log, int agents, double segment_duration_s);
  PredictionSet predict(int segment) override;

 private:
  ViewpointLog log_;
  int agents_;
  double segment_duration_s_;
};

// Attention-model predictor fed with the quantized recent true trajectory.
// Frame features default to zeros when no source is wired in.
class ModelPredictor : public ViewpointPredictor {
 public:
  ModelPredictor(const PredictorConfig& cfg, ViewpointLog log, int agents,
                 double segment_duration_s);
  PredictionSet predict(int segment) override;

 private:
  AttentionModel model_;
  Codebook codebook_;
  ViewpointLog log_;
  int agents_;
  double segment_duration_s_;
  std::vector<Mat> zero_frames_;
};

struct EnvConfig {
  VideoManifest manifest;
  NetworkTrace trace;
  QoEWeights weights;
  int agents = 3;        // I
  int history_len = 8;   // k
  double max_buffer_s = 60.0;
  Fov fov;
  uint64_t seed = 1;
  PredictorConfig predictor;

  void validate() const;
};

using Observation = std::vector<double>;

// one episode-log row per segment
struct QoERow {
  int segment = 0;
  std::vector<int> actions;
  int rest_rung = 0;
  std::vector<double> psi;
  std::vector<double> quality;
  QoEBreakdown qoe;
  double buffer_before_s = 0.0;
  double buffer_after_s = 0.0;
  double download_s = 0.0;
  double rebuffer_s = 0.0;
  double size_mb = 0.0;
};

struct StepResult {
  std::vector<Observation> observations;
  double reward = 0.0;
  QoEBreakdown qoe;
  bool done = false;
};

// Trace-driven playback environment. One instance is single threaded;
// run independent instances for parallel rollouts.
class Env {
 public:
  explicit Env(EnvConfig cfg);
  Env(EnvConfig cfg, std::unique_ptr<ViewpointPredictor> predictor);

  std::vector<Observation> reset();
  // Viewport region i downloads at rung actions[i]; the rest region downloads
  // at rest_rung (lowest rung unless a policy rates the whole video).
  StepResult step(const std::vector<int>& actions, int rest_rung = 0);

  bool done() const { return done_; }
  int agents() const { return cfg_.agents; }
  int observation_size() const;  // 2k + 2N + 3
  Observation observe(int agent) const;
  std::vector<double> global_state() const;  // concatenated agent observations

  const EnvConfig& config() const { return cfg_; }
  const VideoManifest& manifest() const { return cfg_.manifest; }
  int segment_cursor() const { return t_; }
  double buffer_s() const { return buffer_s_; }
  double trace_clock_s() const { return clock_s_; }
  const RegionAssignment& current_partition() const { return part_; }
  // empty before the first step of an episode
  const std::vector<double>& prev_quality() const { return prev_q_; }
  // oldest first, length k, zero-padded at episode start
  const std::vector<double>& download_history() const { return dl_hist_; }
  const std::vector<double>& throughput_history() const { return thr_hist_; }
  const std::vector<QoERow>& episode_log() const { return log_; }

 private:
  void advance_partition();

  EnvConfig cfg_;
  std::unique_ptr<ViewpointPredictor> predictor_;
  int t_ = 0;
  double buffer_s_ = 0.0;
  double clock_s_ = 0.0;
  std::vector<double> dl_hist_, thr_hist_;
  std::vector<int> last_rung_;
  bool has_last_rung_ = false;
  std::vector<double> prev_q_;
  RegionAssignment part_;
  std::vector<QoERow> log_;
  bool done_ = true;  // reset() starts an episode
};

// (# steps with rebuffering) / segments, from a completed episode log
double freeze_frequency(const std::vector<QoERow>& episode_log);

void write_episode_log(const std::string& path, const std::vector<QoERow>& log);

std::unique_ptr<ViewpointPredictor> make_predictor(const PredictorConfig& cfg, int agents,
                                                   double segment_duration_s);

}  // namespace vstream
