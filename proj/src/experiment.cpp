#include "vstream/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "vstream/fixtures.hpp"
#include "vstream/manifest.hpp"

namespace vstream {

namespace fs = std::filesystem;
using nlohmann::json;

PolicyKind parse_policy(const std::string& name) {
  if (name == "mappo") return PolicyKind::Mappo;
  if (name == "ippo") return PolicyKind::Ippo;
  if (name == "bb") return PolicyKind::BB;
  if (name == "rb") return PolicyKind::RB;
  if (name == "mpc") return PolicyKind::MPC;
  if (name == "dynamic") return PolicyKind::Dynamic;
  if (name == "random") return PolicyKind::Random;
  throw std::runtime_error("unknown policy \"" + name + "\"");
}

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Mappo: return "mappo";
    case PolicyKind::Ippo: return "ippo";
    case PolicyKind::BB: return "bb";
    case PolicyKind::RB: return "rb";
    case PolicyKind::MPC: return "mpc";
    case PolicyKind::Dynamic: return "dynamic";
    case PolicyKind::Random: return "random";
  }
  throw std::logic_error("policy_name: bad kind");
}

bool is_learned(PolicyKind kind) {
  return kind == PolicyKind::Mappo || kind == PolicyKind::Ippo;
}

void ExperimentSpec::validate() const {
  if (trace_paths.empty()) throw std::runtime_error("experiment: no traces configured");
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw std::runtime_error("experiment: split fraction must be in (0, 1)");
  if (repetitions < 1) throw std::runtime_error("experiment: repetitions must be >= 1");
  weights.validate();
  baselines.validate();
  train.validate();
}

ExperimentSpec spec_from_config(const Config& cfg) {
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"env",
       {"manifest", "trace", "trace_dir", "trace_offset_mbps", "agents", "history",
        "max_buffer_s", "fov_h", "fov_v", "predictor", "oracle_log", "viewpoint_log",
        "checkpoint", "codebook"}},
      {"qoe", {"objective", "signed_variation"}},
      {"train",
       {"gamma", "lambda", "epsilon", "actor_lr", "critic_lr", "epochs", "minibatch",
        "episodes", "parallel_envs", "entropy_coef", "mode", "hidden", "conv_front",
        "conv_channels", "conv_kernel"}},
      {"baseline",
       {"bb_low_s", "bb_high_s", "rb_history", "mpc_horizon", "dynamic_threshold_s"}},
      {"experiment", {"policy", "repetitions", "split", "seed", "out"}},
  };
  cfg.require_known(allowed);

  ExperimentSpec spec;
  spec.manifest_path = cfg.get("env", "manifest", "");
  if (cfg.has("env", "trace")) spec.trace_paths = cfg.get_string_list("env", "trace", {});
  if (cfg.has("env", "trace_dir")) {
    const std::string dir = cfg.get("env", "trace_dir", "");
    if (!fs::is_directory(dir)) throw std::runtime_error("experiment: no trace dir " + dir);
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        found.push_back(entry.path().string());
    std::sort(found.begin(), found.end());
    spec.trace_paths.insert(spec.trace_paths.end(), found.begin(), found.end());
  }
  spec.trace_offset_mbps = cfg.get_double("env", "trace_offset_mbps", 0.0);
  spec.agents = cfg.get_int("env", "agents", 3);
  spec.history_len = cfg.get_int("env", "history", 8);
  spec.max_buffer_s = cfg.get_double("env", "max_buffer_s", 60.0);
  spec.fov.h_deg = cfg.get_double("env", "fov_h", 100.0);
  spec.fov.v_deg = cfg.get_double("env", "fov_v", 100.0);

  const std::string pk = cfg.get("env", "predictor", "oracle-log");
  if (pk == "oracle-log")
    spec.predictor.kind = PredictorConfig::Kind::OracleLog;
  else if (pk == "baseline")
    spec.predictor.kind = PredictorConfig::Kind::Baseline;
  else if (pk == "model")
    spec.predictor.kind = PredictorConfig::Kind::Model;
  else
    throw std::runtime_error("experiment: unknown predictor \"" + pk + "\"");
  spec.predictor.oracle_log_path = cfg.get("env", "oracle_log", "");
  spec.predictor.viewpoint_log_path = cfg.get("env", "viewpoint_log", "");
  spec.predictor.checkpoint_path = cfg.get("env", "checkpoint", "");
  spec.predictor.codebook_path = cfg.get("env", "codebook", "");

  spec.weights = QoEWeights::preset(cfg.get("qoe", "objective", "1,1,1,1"));
  spec.weights.signed_variation = cfg.get_bool("qoe", "signed_variation", false);

  spec.train.gamma = cfg.get_double("train", "gamma", 0.99);
  spec.train.lambda = cfg.get_double("train", "lambda", 0.95);
  spec.train.clip_eps = cfg.get_double("train", "epsilon", 0.2);
  spec.train.actor_lr = cfg.get_double("train", "actor_lr", 1e-4);
  spec.train.critic_lr = cfg.get_double("train", "critic_lr", 1e-4);
  spec.train.epochs = cfg.get_int("train", "epochs", 4);
  spec.train.minibatch = cfg.get_int("train", "minibatch", 64);
  spec.train.total_episodes = cfg.get_int("train", "episodes", 500);
  spec.train.parallel_envs = cfg.get_int("train", "parallel_envs", 1);
  spec.train.entropy_coef = cfg.get_double("train", "entropy_coef", 0.01);
  spec.train.mode = cfg.get("train", "mode", "mappo");
  spec.train.hidden = cfg.get_int_list("train", "hidden", {64, 64});
  spec.train.conv_front = cfg.get_bool("train", "conv_front", false);
  spec.train.conv_channels = cfg.get_int("train", "conv_channels", 8);
  spec.train.conv_kernel = cfg.get_int("train", "conv_kernel", 4);

  spec.baselines.bb_low_s = cfg.get_double("baseline", "bb_low_s", 5.0);
  spec.baselines.bb_high_s = cfg.get_double("baseline", "bb_high_s", 15.0);
  spec.baselines.rb_history = cfg.get_int("baseline", "rb_history", 8);
  spec.baselines.mpc_horizon = cfg.get_int("baseline", "mpc_horizon", 5);
  spec.baselines.dynamic_threshold_s = cfg.get_double("baseline", "dynamic_threshold_s", 10.0);

  spec.policy = parse_policy(cfg.get("experiment", "policy", "mappo"));
  spec.repetitions = cfg.get_int("experiment", "repetitions", 1);
  spec.split_fraction = cfg.get_double("experiment", "split", 0.8);
  spec.seed = cfg.get_u64("experiment", "seed", 1);
  spec.train.seed = spec.seed;
  spec.out_dir = cfg.get("experiment", "out", "results");
  return spec;
}

void split_traces(int count, double fraction, uint64_t seed, std::vector<int>& train,
                  std::vector<int>& test) {
  train.clear();
  test.clear();
  if (count < 1) throw std::invalid_argument("split_traces: no traces");
  if (count == 1) {  // degenerate single-trace set: same trace on both sides
    train.push_back(0);
    test.push_back(0);
    return;
  }
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed * 2654435761u + 17);
  rng.shuffle(order);
  int n_train = static_cast<int>(std::lround(fraction * count));
  n_train = std::clamp(n_train, 1, count - 1);
  train.assign(order.begin(), order.begin() + n_train);
  test.assign(order.begin() + n_train, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
}

EpisodeStats play_episode(Env& env, PolicyKind kind, const BaselineConfig& bc,
                          const MultiAgentPPO* algo, Rng& rng, std::vector<QoERow>* log_out) {
  if (is_learned(kind) && algo == nullptr)
    throw std::invalid_argument("play_episode: learned policy needs trained networks");
  std::vector<Observation> obs = env.reset();
  const int n = env.manifest().rungs();
  const int agents = env.agents();
  while (!env.done()) {
    std::vector<int> actions(agents, 0);
    int rest_rung = 0;
    switch (kind) {
      case PolicyKind::Mappo:
      case PolicyKind::Ippo:
        actions = algo->act_greedy(obs);
        break;
      case PolicyKind::BB: {
        // BB rates the entire video, the rest region included
        const int rung = bb_select(env.buffer_s(), n, bc.bb_low_s, bc.bb_high_s);
        actions.assign(agents, rung);
        rest_rung = rung;
        break;
      }
      case PolicyKind::RB: {
        std::vector<double> hist = env.throughput_history();
        if (static_cast<int>(hist.size()) > bc.rb_history)
          hist.erase(hist.begin(), hist.end() - bc.rb_history);
        actions.assign(agents, rb_select(hist, env.manifest().ladder_mbps));
        break;
      }
      case PolicyKind::MPC: {
        std::vector<double> usable;
        for (double v : env.throughput_history())
          if (v > 0.0) usable.push_back(v);
        if (static_cast<int>(usable.size()) > bc.rb_history)
          usable.erase(usable.begin(), usable.end() - bc.rb_history);
        const double predicted =
            usable.empty() ? env.manifest().ladder_mbps[0] : harmonic_mean(usable);
        actions.assign(agents, mpc_select(env, bc.mpc_horizon, predicted));
        break;
      }
      case PolicyKind::Dynamic:
        actions.assign(agents, dynamic_select(env, bc));
        break;
      case PolicyKind::Random:
        for (int& a : actions) a = rng.uniform_int(n);
        break;
    }
    const StepResult res = env.step(actions, rest_rung);
    obs = res.observations;
  }
  if (log_out) *log_out = env.episode_log();
  return summarize_episode(env.episode_log());
}

namespace {

json stats_to_json(const EpisodeStats& s) {
  return json{{"mean_qoe", s.mean_qoe},
              {"viewport_quality", s.viewport_quality},
              {"temporal_variation", s.temporal_variation},
              {"spatial_variation", s.spatial_variation},
              {"rebuffer_s", s.rebuffer_s},
              {"freeze_freq", s.freeze_freq}};
}

EpisodeStats stats_from_json(const json& j) {
  EpisodeStats s;
  s.mean_qoe = j.at("mean_qoe").get<double>();
  s.viewport_quality = j.at("viewport_quality").get<double>();
  s.temporal_variation = j.at("temporal_variation").get<double>();
  s.spatial_variation = j.at("spatial_variation").get<double>();
  s.rebuffer_s = j.at("rebuffer_s").get<double>();
  s.freeze_freq = j.at("freeze_freq").get<double>();
  return s;
}

EpisodeStats mean_stats(const std::vector<EpisodeStats>& all) {
  EpisodeStats m;
  for (const auto& s : all) {
    m.mean_qoe += s.mean_qoe;
    m.viewport_quality += s.viewport_quality;
    m.temporal_variation += s.temporal_variation;
    m.spatial_variation += s.spatial_variation;
    m.rebuffer_s += s.rebuffer_s;
    m.freeze_freq += s.freeze_freq;
  }
  const double n = static_cast<double>(all.size());
  m.mean_qoe /= n;
  m.viewport_quality /= n;
  m.temporal_variation /= n;
  m.spatial_variation /= n;
  m.rebuffer_s /= n;
  m.freeze_freq /= n;
  return m;
}

EpisodeStats stddev_stats(const std::vector<EpisodeStats>& all, const EpisodeStats& mean) {
  EpisodeStats v;
  if (all.size() < 2) return v;
  for (const auto& s : all) {
    v.mean_qoe += (s.mean_qoe - mean.mean_qoe) * (s.mean_qoe - mean.mean_qoe);
    v.viewport_quality += (s.viewport_quality - mean.viewport_quality) *
                          (s.viewport_quality - mean.viewport_quality);
    v.temporal_variation += (s.temporal_variation - mean.temporal_variation) *
                            (s.temporal_variation - mean.temporal_variation);
    v.spatial_variation += (s.spatial_variation - mean.spatial_variation) *
                           (s.spatial_variation - mean.spatial_variation);
    v.rebuffer_s += (s.rebuffer_s - mean.rebuffer_s) * (s.rebuffer_s - mean.rebuffer_s);
    v.freeze_freq += (s.freeze_freq - mean.freeze_freq) * (s.freeze_freq - mean.freeze_freq);
  }
  const double n = static_cast<double>(all.size() - 1);
  v.mean_qoe = std::sqrt(v.mean_qoe / n);
  v.viewport_quality = std::sqrt(v.viewport_quality / n);
  v.temporal_variation = std::sqrt(v.temporal_variation / n);
  v.spatial_variation = std::sqrt(v.spatial_variation / n);
  v.rebuffer_s = std::sqrt(v.rebuffer_s / n);
  v.freeze_freq = std::sqrt(v.freeze_freq / n);
  return v;
}

struct LoadedTraces {
  std::vector<NetworkTrace> traces;
  std::vector<int> train_idx, test_idx;
};

LoadedTraces load_trace_set(const ExperimentSpec& spec) {
  LoadedTraces out;
  for (const auto& path : spec.trace_paths)
    out.traces.push_back(load_trace(path, spec.trace_offset_mbps));
  split_traces(static_cast<int>(out.traces.size()), spec.split_fraction, spec.seed,
               out.train_idx, out.test_idx);
  return out;
}

VideoManifest load_or_default_manifest(const ExperimentSpec& spec) {
  if (spec.manifest_path.empty()) return generate_manifest();
  return load_manifest(spec.manifest_path);
}

EnvConfig make_env_config(const ExperimentSpec& spec, const VideoManifest& manifest,
                          const NetworkTrace& trace) {
  EnvConfig ec;
  ec.manifest = manifest;
  ec.trace = trace;
  ec.weights = spec.weights;
  ec.agents = spec.agents;
  ec.history_len = spec.history_len;
  ec.max_buffer_s = spec.max_buffer_s;
  ec.fov = spec.fov;
  ec.seed = spec.seed;
  ec.predictor = spec.predictor;
  return ec;
}

void write_summary_text(const std::string& path, const ResultBundle& bundle) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("summary: cannot write " + path);
  out.precision(17);
  out << "# policy " << bundle.policy << " objective " << bundle.objective << "\n";
  out << "# rep seed mean_qoe q1 q2 q3 q4 freeze_freq\n";
  for (size_t r = 0; r < bundle.repetitions.size(); ++r) {
    const auto& rep = bundle.repetitions[r];
    out << r << ' ' << rep.seed << ' ' << rep.mean.mean_qoe << ' ' << rep.mean.viewport_quality
        << ' ' << rep.mean.temporal_variation << ' ' << rep.mean.spatial_variation << ' '
        << rep.mean.rebuffer_s << ' ' << rep.mean.freeze_freq << '\n';
  }
  out << "mean - " << bundle.mean.mean_qoe << ' ' << bundle.mean.viewport_quality << ' '
      << bundle.mean.temporal_variation << ' ' << bundle.mean.spatial_variation << ' '
      << bundle.mean.rebuffer_s << ' ' << bundle.mean.freeze_freq << '\n';
  out << "std - " << bundle.stddev.mean_qoe << ' ' << bundle.stddev.viewport_quality << ' '
      << bundle.stddev.temporal_variation << ' ' << bundle.stddev.spatial_variation << ' '
      << bundle.stddev.rebuffer_s << ' ' << bundle.stddev.freeze_freq << '\n';
}

void write_summary_json(const std::string& path, const ResultBundle& bundle) {
  json j;
  j["policy"] = bundle.policy;
  j["objective"] = bundle.objective;
  j["train_traces"] = bundle.train_traces;
  j["test_traces"] = bundle.test_traces;
  j["mean"] = stats_to_json(bundle.mean);
  j["stddev"] = stats_to_json(bundle.stddev);
  j["repetitions"] = json::array();
  for (const auto& rep : bundle.repetitions)
    j["repetitions"].push_back(json{{"seed", rep.seed}, {"mean", stats_to_json(rep.mean)}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("summary: cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace

ResultBundle run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  fs::create_directories(spec.out_dir);

  const VideoManifest manifest = load_or_default_manifest(spec);
  const LoadedTraces traces = load_trace_set(spec);

  ResultBundle bundle;
  bundle.policy = policy_name(spec.policy);
  bundle.objective = spec.weights.to_string();
  bundle.train_traces = traces.train_idx;
  bundle.test_traces = traces.test_idx;

  for (int rep = 0; rep < spec.repetitions; ++rep) {
    const uint64_t rep_seed = spec.seed + static_cast<uint64_t>(rep);
    const std::string rep_dir = spec.out_dir + "/rep" + std::to_string(rep);
    fs::create_directories(rep_dir);

    std::unique_ptr<MultiAgentPPO> algo;
    if (is_learned(spec.policy)) {
      TrainConfig tc = spec.train;
      tc.seed = rep_seed;
      tc.mode = spec.policy == PolicyKind::Ippo ? "ippo" : "mappo";
      // observation size depends only on static env shape
      EnvConfig probe = make_env_config(spec, manifest, traces.traces[traces.train_idx[0]]);
      Env probe_env(probe);
      algo = std::make_unique<MultiAgentPPO>(tc, probe_env.observation_size(), manifest.rungs(),
                                             spec.agents);
      const auto env_factory = [&](int episode) {
        const int idx = traces.train_idx[episode % traces.train_idx.size()];
        return std::make_unique<Env>(make_env_config(spec, manifest, traces.traces[idx]));
      };
      const TrainResult tr =
          train(*algo, env_factory, tc.total_episodes, rep_dir + "/checkpoint.bin");
      write_learning_curve(rep_dir + "/curve.txt", tr.curve);
    }

    // evaluation on the held-out traces
    std::vector<EpisodeStats> eval;
    Rng eval_rng(rep_seed * 69313 + 11);
    for (size_t k = 0; k < traces.test_idx.size(); ++k) {
      Env env(make_env_config(spec, manifest, traces.traces[traces.test_idx[k]]));
      std::vector<QoERow> log;
      eval.push_back(
          play_episode(env, spec.policy, spec.baselines, algo.get(), eval_rng, &log));
      write_episode_log(rep_dir + "/episodes_trace" + std::to_string(traces.test_idx[k]) +
                            ".txt",
                        log);
    }
    RepetitionResult rr;
    rr.seed = rep_seed;
    rr.mean = mean_stats(eval);
    bundle.repetitions.push_back(rr);
  }

  std::vector<EpisodeStats> rep_means;
  for (const auto& rep : bundle.repetitions) rep_means.push_back(rep.mean);
  bundle.mean = mean_stats(rep_means);
  bundle.stddev = stddev_stats(rep_means, bundle.mean);

  write_summary_text(spec.out_dir + "/summary.txt", bundle);
  write_summary_json(spec.out_dir + "/summary.json", bundle);
  return bundle;
}

void sweep(const ExperimentSpec& spec, const std::vector<double>& epsilons,
           const std::vector<double>& lambdas) {
  if (epsilons.empty() || lambdas.empty())
    throw std::runtime_error("sweep: epsilon and lambda sets must be non-empty");
  if (!is_learned(spec.policy)) throw std::runtime_error("sweep: policy must be mappo or ippo");
  spec.validate();
  fs::create_directories(spec.out_dir);

  const VideoManifest manifest = load_or_default_manifest(spec);
  const LoadedTraces traces = load_trace_set(spec);

  json grid = json::array();
  for (double eps : epsilons)
    for (double lam : lambdas) {
      ExperimentSpec cell = spec;
      cell.train.clip_eps = eps;
      cell.train.lambda = lam;
      cell.train.seed = spec.seed;

      TrainConfig tc = cell.train;
      tc.mode = spec.policy == PolicyKind::Ippo ? "ippo" : "mappo";
      EnvConfig probe = make_env_config(cell, manifest, traces.traces[traces.train_idx[0]]);
      Env probe_env(probe);
      MultiAgentPPO algo(tc, probe_env.observation_size(), manifest.rungs(), spec.agents);
      const auto env_factory = [&](int episode) {
        const int idx = traces.train_idx[episode % traces.train_idx.size()];
        return std::make_unique<Env>(make_env_config(cell, manifest, traces.traces[idx]));
      };
      const TrainResult tr = train(algo, env_factory, tc.total_episodes, "");

      std::ostringstream name;
      name << "curve_eps" << eps << "_lam" << lam << ".txt";
      write_learning_curve(spec.out_dir + "/" + name.str(), tr.curve);

      // every cell is scored on the same held-out traces
      std::vector<EpisodeStats> eval;
      Rng eval_rng(spec.seed * 69313 + 11);
      for (int idx : traces.test_idx) {
        Env env(make_env_config(cell, manifest, traces.traces[idx]));
        eval.push_back(
            play_episode(env, spec.policy, spec.baselines, &algo, eval_rng, nullptr));
      }
      grid.push_back(json{{"epsilon", eps},
                          {"lambda", lam},
                          {"curve", name.str()},
                          {"test_traces", traces.test_idx},
                          {"eval", stats_to_json(mean_stats(eval))}});
    }
  std::ofstream out(spec.out_dir + "/sweep.json");
  if (!out) throw std::runtime_error("sweep: cannot write sweep.json");
  out << grid.dump(2) << '\n';
}

std::vector<ReportRow> report(const std::string& results_dir) {
  if (!fs::is_directory(results_dir))
    throw std::runtime_error("report: no such directory " + results_dir);
  std::vector<ReportRow> rows;
  std::vector<std::string> subdirs;
  for (const auto& entry : fs::directory_iterator(results_dir))
    if (entry.is_directory() && fs::exists(entry.path() / "summary.json"))
      subdirs.push_back(entry.path().string());
  if (fs::exists(fs::path(results_dir) / "summary.json")) subdirs.push_back(results_dir);
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty())
    throw std::runtime_error("report: no result bundles (summary.json) under " + results_dir);

  for (const auto& dir : subdirs) {
    std::ifstream in(dir + "/summary.json");
    json j;
    in >> j;
    ReportRow row;
    row.directory = dir;
    row.policy = j.at("policy").get<std::string>();
    row.mean = stats_from_json(j.at("mean"));
    row.mean_qoe = row.mean.mean_qoe;
    rows.push_back(row);
  }
  double best = -1e300;
  for (const auto& row : rows) best = std::max(best, row.mean_qoe);
  for (auto& row : rows) row.normalized_qoe = row.mean_qoe / best;
  std::sort(rows.begin(), rows.end(),
            [](const ReportRow& a, const ReportRow& b) { return a.mean_qoe > b.mean_qoe; });
  return rows;
}

void write_report(const std::vector<ReportRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  out.precision(17);
  out << "# policy normalized_qoe mean_qoe q1 q2 q3 q4 freeze_freq directory\n";
  for (const auto& row : rows)
    out << row.policy << ' ' << row.normalized_qoe << ' ' << row.mean_qoe << ' '
        << row.mean.viewport_quality << ' ' << row.mean.temporal_variation << ' '
        << row.mean.spatial_variation << ' ' << row.mean.rebuffer_s << ' '
        << row.mean.freeze_freq << ' ' << row.directory << '\n';
}

}  // namespace vstream
