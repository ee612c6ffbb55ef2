#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vstream/baselines.hpp"
#include "vstream/config.hpp"
#include "vstream/env.hpp"
#include "vstream/mappo.hpp"

namespace vstream {

enum class PolicyKind { Mappo, Ippo, BB, RB, MPC, Dynamic, Random };

PolicyKind parse_policy(const std::string& name);
std::string policy_name(PolicyKind kind);
bool is_learned(PolicyKind kind);

struct ExperimentSpec {
  PolicyKind policy = PolicyKind::Mappo;
  std::string manifest_path;               // empty: default generated manifest
  std::vector<std::string> trace_paths;    // the trace set
  double trace_offset_mbps = 0.0;
  QoEWeights weights;
  int agents = 3;
  int history_len = 8;
  double max_buffer_s = 60.0;
  Fov fov;
  PredictorConfig predictor;
  BaselineConfig baselines;
  TrainConfig train;
  double split_fraction = 0.8;
  int repetitions = 1;
  uint64_t seed = 1;
  std::string out_dir = "results";

  void validate() const;
};

// parses [env] [qoe] [train] [baseline] [experiment] sections over defaults
ExperimentSpec spec_from_config(const Config& cfg);

struct RepetitionResult {
  uint64_t seed = 0;
  EpisodeStats mean;  // across evaluation traces
};

struct ResultBundle {
  std::string policy;
  std::string objective;
  std::vector<RepetitionResult> repetitions;
  EpisodeStats mean;
  EpisodeStats stddev;
  std::vector<int> train_traces, test_traces;  // indices into the trace set
};

// deterministic, disjoint, seed-stable split of trace indices
void split_traces(int count, double fraction, uint64_t seed, std::vector<int>& train,
                  std::vector<int>& test);

// one rule/random/learned-greedy episode on a prepared environment
EpisodeStats play_episode(Env& env, PolicyKind kind, const BaselineConfig& bc,
                          const MultiAgentPPO* algo, Rng& rng,
                          std::vector<QoERow>* log_out = nullptr);

// Train (learned policies) then evaluate on the test split; write summary.txt,
// summary.json, per-episode logs, learning curves, and checkpoints under
// spec.out_dir. Byte-identical for identical seeds.
ResultBundle run_experiment(const ExperimentSpec& spec);

// one training run per (epsilon, lambda) cell; curve files named by cell
void sweep(const ExperimentSpec& spec, const std::vector<double>& epsilons,
           const std::vector<double>& lambdas);

struct ReportRow {
  std::string directory;
  std::string policy;
  double mean_qoe = 0.0;
  double normalized_qoe = 0.0;
  EpisodeStats mean;
};

// scans result bundles under results_dir and normalizes by the best mean QoE
std::vector<ReportRow> report(const std::string& results_dir);
void write_report(const std::vector<ReportRow>& rows, const std::string& path);

}  // namespace vstream
