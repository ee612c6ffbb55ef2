#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vstream/env.hpp"
#include "vstream/nets.hpp"
#include "vstream/rng.hpp"

namespace vstream {

struct TrainConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_eps = 0.2;
  double actor_lr = 1e-4;
  double critic_lr = 1e-4;
  int epochs = 4;
  int minibatch = 64;
  int total_episodes = 500;
  int parallel_envs = 1;
  double entropy_coef = 0.01;
  std::string mode = "mappo";  // mappo: centralized critics; ippo: local critics
  std::vector<int> hidden{64, 64};
  bool conv_front = false;
  int conv_channels = 8;
  int conv_kernel = 4;
  uint64_t seed = 1;

  void validate() const;
};

// estimated discounted return per step: suffix sum of rewards plus a
// discounted bootstrap value (zero at a true terminal)
std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double bootstrap_value, double gamma);

// truncated generalized advantage estimation over TD residuals
std::vector<double> gae(const std::vector<double>& rewards, const std::vector<double>& values,
                        double bootstrap_value, double gamma, double lambda);

// clipped-ratio cap: (1 +/- eps) * advantage depending on its sign
double ppo_clip_cap(double eps, double advantage);

// mean over samples of min(ratio * A, ppo_clip_cap(eps, A))
double ppo_clip_objective(const std::vector<double>& logp_new,
                          const std::vector<double>& logp_old,
                          const std::vector<double>& advantages, double eps);

// dJ/dlogp_new per sample (zero where the clipped branch is active)
std::vector<double> ppo_clip_grad_logp(const std::vector<double>& logp_new,
                                       const std::vector<double>& logp_old,
                                       const std::vector<double>& advantages, double eps);

// mean squared error between value estimates and returns
double critic_loss(const std::vector<double>& values, const std::vector<double>& returns);

// per-agent trajectories, episodes concatenated
struct RolloutBuffer {
  struct Agent {
    std::vector<std::vector<double>> obs;
    std::vector<std::vector<double>> critic_in;  // global state (mappo) or obs (ippo)
    std::vector<int> actions;
    std::vector<double> logp_old;
    std::vector<double> rewards;  // shared team reward, stored verbatim
    std::vector<double> values;
    std::vector<uint8_t> done;
  };
  std::vector<Agent> agents;
  std::vector<int> episode_ends;  // exclusive step indices

  int steps() const { return agents.empty() ? 0 : static_cast<int>(agents[0].actions.size()); }
  void check_consistent() const;
};

struct UpdateStats {
  double actor_objective = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

struct AgentNets {
  FeedForwardNet actor;
  FeedForwardNet critic;
};

// MAPPO (centralized critics) and its IPPO ablation over a shared-reward
// environment; one actor/critic pair per agent, no parameter sharing.
class MultiAgentPPO {
 public:
  MultiAgentPPO(TrainConfig cfg, int observation_size, int action_count, int agents);

  // one full episode per env, behaviour log-probs stored
  RolloutBuffer collect_rollout(const std::vector<Env*>& envs, Rng& rng) const;

  std::vector<int> act_sample(const std::vector<Observation>& obs, Rng& rng) const;
  std::vector<int> act_greedy(const std::vector<Observation>& obs) const;

  UpdateStats update(const RolloutBuffer& buffer);

  int agent_count() const { return static_cast<int>(nets_.size()); }
  AgentNets& nets(int agent) { return *nets_[agent]; }
  const AgentNets& nets(int agent) const { return *nets_[agent]; }
  const TrainConfig& config() const { return cfg_; }

  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  std::vector<double> critic_input(const std::vector<Observation>& obs, int agent) const;

  TrainConfig cfg_;
  int obs_size_;
  int action_count_;
  std::vector<std::unique_ptr<AgentNets>> nets_;
  Rng shuffle_rng_;
};

struct EpisodeStats {
  double mean_qoe = 0.0;
  double viewport_quality = 0.0;
  double temporal_variation = 0.0;
  double spatial_variation = 0.0;
  double rebuffer_s = 0.0;
  double freeze_freq = 0.0;
};

EpisodeStats summarize_episode(const std::vector<QoERow>& log);

struct TrainResult {
  std::vector<EpisodeStats> curve;  // one row per episode
  double best_mean_qoe = 0.0;
};

// Iterates collect/update until total_episodes episodes have been played.
// env_factory(episode_index) supplies a fresh environment (trace cycling is
// the caller's concern). Saves the best-episode checkpoint when
// checkpoint_path is non-empty.
TrainResult train(MultiAgentPPO& algo,
                  const std::function<std::unique_ptr<Env>(int)>& env_factory,
                  int total_episodes, const std::string& checkpoint_path);

void write_learning_curve(const std::string& path, const std::vector<EpisodeStats>& curve);

}  // namespace vstream
