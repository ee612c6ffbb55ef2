#include "vstream/mappo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vstream/checkpoint.hpp"

namespace vstream {

void TrainConfig::validate() const {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument("train config: gamma must be in (0, 1]");
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("train config: lambda must be in [0, 1]");
  if (!(clip_eps > 0.0)) throw std::invalid_argument("train config: clip epsilon must be > 0");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0))
    throw std::invalid_argument("train config: learning rates must be positive");
  if (epochs < 1 || minibatch < 1 || total_episodes < 1 || parallel_envs < 1)
    throw std::invalid_argument("train config: counts must be positive");
  if (mode != "mappo" && mode != "ippo")
    throw std::invalid_argument("train config: mode must be mappo or ippo");
  if (entropy_coef < 0.0) throw std::invalid_argument("train config: entropy_coef must be >= 0");
}

std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double bootstrap_value, double gamma) {
  if (rewards.empty()) throw std::invalid_argument("discounted_returns: empty horizon");
  std::vector<double> out(rewards.size());
  double acc = bootstrap_value;
  for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
    acc = rewards[t] + gamma * acc;
    out[t] = acc;
  }
  return out;
}

std::vector<double> gae(const std::vector<double>& rewards, const std::vector<double>& values,
                        double bootstrap_value, double gamma, double lambda) {
  if (rewards.empty() || rewards.size() != values.size())
    throw std::invalid_argument("gae: rewards/values must be aligned and non-empty");
  const int n = static_cast<int>(rewards.size());
  std::vector<double> out(n);
  double acc = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double next_value = (t + 1 < n) ? values[t + 1] : bootstrap_value;
    const double delta = rewards[t] + gamma * next_value - values[t];
    acc = delta + gamma * lambda * acc;
    out[t] = acc;
  }
  return out;
}

double ppo_clip_cap(double eps, double advantage) {
  return advantage >= 0.0 ? (1.0 + eps) * advantage : (1.0 - eps) * advantage;
}

double ppo_clip_objective(const std::vector<double>& logp_new,
                          const std::vector<double>& logp_old,
                          const std::vector<double>& advantages, double eps) {
  if (logp_new.size() != logp_old.size() || logp_new.size() != advantages.size() ||
      logp_new.empty())
    throw std::invalid_argument("ppo_clip: inputs must be aligned and non-empty");
  double total = 0.0;
  for (size_t i = 0; i < logp_new.size(); ++i) {
    const double ratio = std::exp(logp_new[i] - logp_old[i]);
    total += std::min(ratio * advantages[i], ppo_clip_cap(eps, advantages[i]));
  }
  return total / static_cast<double>(logp_new.size());
}

std::vector<double> ppo_clip_grad_logp(const std::vector<double>& logp_new,
                                       const std::vector<double>& logp_old,
                                       const std::vector<double>& advantages, double eps) {
  if (logp_new.size() != logp_old.size() || logp_new.size() != advantages.size())
    throw std::invalid_argument("ppo_clip: inputs must be aligned");
  std::vector<double> grad(logp_new.size(), 0.0);
  const double n = static_cast<double>(logp_new.size());
  for (size_t i = 0; i < logp_new.size(); ++i) {
    const double ratio = std::exp(logp_new[i] - logp_old[i]);
    const double unclipped = ratio * advantages[i];
    if (unclipped <= ppo_clip_cap(eps, advantages[i]))
      grad[i] = unclipped / n;  // d(r A)/dlogp = r A
  }
  return grad;
}

double critic_loss(const std::vector<double>& values, const std::vector<double>& returns) {
  if (values.size() != returns.size() || values.empty())
    throw std::invalid_argument("critic_loss: inputs must be aligned and non-empty");
  double total = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - returns[i];
    total += d * d;
  }
  return total / static_cast<double>(values.size());
}

void RolloutBuffer::check_consistent() const {
  const int n = steps();
  for (const auto& a : agents) {
    if (static_cast<int>(a.obs.size()) != n || static_cast<int>(a.critic_in.size()) != n ||
        static_cast<int>(a.actions.size()) != n || static_cast<int>(a.logp_old.size()) != n ||
        static_cast<int>(a.rewards.size()) != n || static_cast<int>(a.values.size()) != n ||
        static_cast<int>(a.done.size()) != n)
      throw std::runtime_error("rollout buffer: misaligned agent trajectories");
    for (double lp : a.logp_old)
      if (!std::isfinite(lp)) throw std::runtime_error("rollout buffer: non-finite log-prob");
  }
  if (episode_ends.empty() || episode_ends.back() != n)
    throw std::runtime_error("rollout buffer: episode boundaries do not cover the buffer");
}

// ---------------------------------------------------------------------------

MultiAgentPPO::MultiAgentPPO(TrainConfig cfg, int observation_size, int action_count,
                             int agents)
    : cfg_(std::move(cfg)),
      obs_size_(observation_size),
      action_count_(action_count),
      shuffle_rng_(cfg_.seed * 104729 + 7) {
  cfg_.validate();
  if (agents < 1) throw std::invalid_argument("mappo: agents must be >= 1");
  const int critic_in = cfg_.mode == "mappo" ? observation_size * agents : observation_size;
  for (int i = 0; i < agents; ++i) {
    NetConfig actor_cfg;
    actor_cfg.input_dim = observation_size;
    actor_cfg.hidden = cfg_.hidden;
    actor_cfg.output_dim = action_count;
    actor_cfg.softmax_head = true;
    actor_cfg.conv_front = cfg_.conv_front;
    actor_cfg.conv_channels = cfg_.conv_channels;
    actor_cfg.conv_kernel = cfg_.conv_kernel;
    actor_cfg.seed = cfg_.seed * 31 + static_cast<uint64_t>(i) * 2 + 1;

    NetConfig critic_cfg = actor_cfg;
    critic_cfg.input_dim = critic_in;
    critic_cfg.output_dim = 1;
    critic_cfg.softmax_head = false;
    critic_cfg.seed = cfg_.seed * 31 + static_cast<uint64_t>(i) * 2 + 2;

    nets_.push_back(std::make_unique<AgentNets>(
        AgentNets{FeedForwardNet(actor_cfg), FeedForwardNet(critic_cfg)}));
  }
}

std::vector<double> MultiAgentPPO::critic_input(const std::vector<Observation>& obs,
                                                int agent) const {
  if (cfg_.mode == "ippo") return obs[agent];
  std::vector<double> global;
  global.reserve(obs.size() * obs[0].size());
  for (const auto& o : obs) global.insert(global.end(), o.begin(), o.end());
  return global;
}

std::vector<int> MultiAgentPPO::act_sample(const std::vector<Observation>& obs,
                                           Rng& rng) const {
  std::vector<int> actions(nets_.size());
  for (size_t i = 0; i < nets_.size(); ++i)
    actions[i] = rng.sample_discrete(nets_[i]->actor.forward(obs[i]));
  return actions;
}

std::vector<int> MultiAgentPPO::act_greedy(const std::vector<Observation>& obs) const {
  std::vector<int> actions(nets_.size());
  for (size_t i = 0; i < nets_.size(); ++i) {
    const auto probs = nets_[i]->actor.forward(obs[i]);
    actions[i] = static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
  }
  return actions;
}

RolloutBuffer MultiAgentPPO::collect_rollout(const std::vector<Env*>& envs, Rng& rng) const {
  if (envs.empty()) throw std::invalid_argument("collect_rollout: no environments");
  RolloutBuffer buf;
  buf.agents.resize(nets_.size());
  for (Env* env : envs) {
    if (env->agents() != agent_count())
      throw std::invalid_argument("collect_rollout: env agent count mismatch");
    std::vector<Observation> obs = env->reset();
    while (!env->done()) {
      std::vector<int> actions(nets_.size());
      for (size_t i = 0; i < nets_.size(); ++i) {
        const auto probs = nets_[i]->actor.forward(obs[i]);
        const int a = rng.sample_discrete(probs);
        actions[i] = a;
        auto& traj = buf.agents[i];
        traj.obs.push_back(obs[i]);
        traj.critic_in.push_back(critic_input(obs, static_cast<int>(i)));
        traj.actions.push_back(a);
        traj.logp_old.push_back(std::log(probs[a]));
        traj.values.push_back(nets_[i]->critic.forward(traj.critic_in.back())[0]);
      }
      const StepResult res = env->step(actions);
      for (size_t i = 0; i < nets_.size(); ++i) {
        buf.agents[i].rewards.push_back(res.reward);
        buf.agents[i].done.push_back(res.done ? 1 : 0);
      }
      obs = res.observations;
    }
    buf.episode_ends.push_back(buf.steps());
  }
  buf.check_consistent();
  return buf;
}

UpdateStats MultiAgentPPO::update(const RolloutBuffer& buffer) {
  buffer.check_consistent();
  const int n = buffer.steps();
  if (n == 0) throw std::invalid_argument("update: empty buffer");

  UpdateStats stats;
  int stat_batches = 0;

  for (size_t ai = 0; ai < nets_.size(); ++ai) {
    const auto& traj = buffer.agents[ai];

    // returns and advantages per episode slice, bootstrap 0 at episode end
    std::vector<double> advantages(n), returns(n);
    int start = 0;
    for (int end : buffer.episode_ends) {
      const std::vector<double> rew(traj.rewards.begin() + start, traj.rewards.begin() + end);
      const std::vector<double> val(traj.values.begin() + start, traj.values.begin() + end);
      const double bootstrap = traj.done[end - 1] ? 0.0 : val.back();
      const auto adv = gae(rew, val, bootstrap, cfg_.gamma, cfg_.lambda);
      const auto ret = discounted_returns(rew, bootstrap, cfg_.gamma);
      for (int t = 0; t < end - start; ++t) {
        advantages[start + t] = adv[t];
        returns[start + t] = ret[t];
      }
      start = end;
    }

    // normalize advantages over the update batch
    double mean = 0.0;
    for (double a : advantages) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    const double stddev = std::sqrt(var / n) + 1e-8;
    for (double& a : advantages) a = (a - mean) / stddev;

    std::vector<int> indices(n);
    std::iota(indices.begin(), indices.end(), 0);

    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      shuffle_rng_.shuffle(indices);
      for (int off = 0; off < n; off += cfg_.minibatch) {
        const int b = std::min(cfg_.minibatch, n - off);

        Mat obs_batch(b, obs_size_);
        Mat critic_batch(b, static_cast<int>(traj.critic_in[0].size()));
        std::vector<int> action_batch(b);
        Mat adv_batch(b, 1), cap_batch(b, 1), old_batch(b, 1), ret_batch(b, 1);
        for (int r = 0; r < b; ++r) {
          const int idx = indices[off + r];
          for (int c = 0; c < obs_size_; ++c) obs_batch(r, c) = traj.obs[idx][c];
          for (int c = 0; c < critic_batch.cols; ++c)
            critic_batch(r, c) = traj.critic_in[idx][c];
          action_batch[r] = traj.actions[idx];
          adv_batch(r, 0) = advantages[idx];
          cap_batch(r, 0) = ppo_clip_cap(cfg_.clip_eps, advantages[idx]);
          old_batch(r, 0) = traj.logp_old[idx];
          ret_batch(r, 0) = returns[idx];
        }

        // actor ascent on the clipped surrogate plus entropy bonus
        {
          nn::Graph g;
          const auto logits = nets_[ai]->actor.forward_logits_graph(g, obs_batch);
          const auto logsoft = g.log_softmax_rows(logits);
          const auto logp_new = g.gather_cols(logsoft, action_batch);
          const auto ratio = g.exp_elem(g.sub(logp_new, g.constant(old_batch)));
          const auto surrogate = g.min_with_const(g.hadamard_const(ratio, adv_batch), cap_batch);
          const auto objective = g.mean_all(surrogate);
          // entropy of the action simplex, averaged over the batch
          const auto plogp = g.hadamard(g.exp_elem(logsoft), logsoft);
          const auto neg_entropy = g.scale(g.sum_all(plogp), 1.0 / b);
          const auto loss =
              g.sub(g.scale(objective, -1.0), g.scale(neg_entropy, -cfg_.entropy_coef));

          const double j = g.value(objective)(0, 0);
          const double ent = -g.value(neg_entropy)(0, 0);
          if (!std::isfinite(g.value(loss)(0, 0))) {
            std::ostringstream msg;
            msg << "update: non-finite actor loss (agent " << ai << ", objective " << j
                << ", entropy " << ent << ")";
            throw std::runtime_error(msg.str());
          }
          nets_[ai]->actor.params().zero_grad();
          g.backward(loss);
          nets_[ai]->actor.params().adam_step(cfg_.actor_lr);

          double clipped = 0.0, kl = 0.0;
          const Mat& rv = g.value(ratio);
          const Mat& ln = g.value(logp_new);
          for (int r = 0; r < b; ++r) {
            if (std::abs(rv(r, 0) - 1.0) > cfg_.clip_eps) clipped += 1.0;
            kl += old_batch(r, 0) - ln(r, 0);
          }
          stats.actor_objective += j;
          stats.entropy += ent;
          stats.clip_fraction += clipped / b;
          stats.approx_kl += kl / b;
        }

        // critic descent on the squared return error
        {
          nn::Graph g;
          const auto value = nets_[ai]->critic.forward_logits_graph(g, critic_batch);
          const auto diff = g.sub(value, g.constant(ret_batch));
          const auto loss = g.mean_all(g.hadamard(diff, diff));
          const double lv = g.value(loss)(0, 0);
          if (!std::isfinite(lv)) {
            std::ostringstream msg;
            msg << "update: non-finite critic loss (agent " << ai << ")";
            throw std::runtime_error(msg.str());
          }
          nets_[ai]->critic.params().zero_grad();
          g.backward(loss);
          nets_[ai]->critic.params().adam_step(cfg_.critic_lr);
          stats.critic_loss += lv;
        }
        ++stat_batches;
      }
    }
  }

  if (stat_batches > 0) {
    stats.actor_objective /= stat_batches;
    stats.critic_loss /= stat_batches;
    stats.entropy /= stat_batches;
    stats.clip_fraction /= stat_batches;
    stats.approx_kl /= stat_batches;
  }
  return stats;
}

void MultiAgentPPO::save(const std::string& path) const {
  std::vector<std::pair<std::string, const Mat*>> tensors;
  for (size_t i = 0; i < nets_.size(); ++i) {
    const std::string prefix = "agent" + std::to_string(i);
    for (const auto* p : nets_[i]->actor.params().all())
      tensors.emplace_back(prefix + ".actor." + p->name, &p->value);
    for (const auto* p : nets_[i]->critic.params().all())
      tensors.emplace_back(prefix + ".critic." + p->name, &p->value);
  }
  save_tensors(path, tensors);
}

void MultiAgentPPO::load(const std::string& path) {
  auto tensors = load_tensors(path);
  for (size_t i = 0; i < nets_.size(); ++i) {
    const std::string prefix = "agent" + std::to_string(i);
    auto restore = [&](nn::ParamStore& store, const std::string& part) {
      for (auto* p : store.all()) {
        auto it = tensors.find(prefix + "." + part + "." + p->name);
        if (it == tensors.end())
          throw std::runtime_error("checkpoint: missing tensor for " + prefix + "." + part +
                                   "." + p->name);
        if (!it->second.same_shape(p->value))
          throw std::runtime_error("checkpoint: shape mismatch for " + p->name);
        p->value = it->second;
      }
    };
    restore(nets_[i]->actor.params(), "actor");
    restore(nets_[i]->critic.params(), "critic");
  }
}

// ---------------------------------------------------------------------------

EpisodeStats summarize_episode(const std::vector<QoERow>& log) {
  if (log.empty()) throw std::invalid_argument("summarize_episode: empty log");
  EpisodeStats s;
  for (const auto& row : log) {
    s.mean_qoe += row.qoe.total;
    s.viewport_quality += row.qoe.viewport_quality;
    s.temporal_variation += row.qoe.temporal_variation;
    s.spatial_variation += row.qoe.spatial_variation;
    s.rebuffer_s += row.qoe.rebuffer_s;
  }
  const double n = static_cast<double>(log.size());
  s.mean_qoe /= n;
  s.viewport_quality /= n;
  s.temporal_variation /= n;
  s.spatial_variation /= n;
  s.rebuffer_s /= n;
  s.freeze_freq = freeze_frequency(log);
  return s;
}

TrainResult train(MultiAgentPPO& algo,
                  const std::function<std::unique_ptr<Env>(int)>& env_factory,
                  int total_episodes, const std::string& checkpoint_path) {
  if (total_episodes < 1) throw std::invalid_argument("train: total_episodes must be >= 1");
  TrainResult result;
  result.best_mean_qoe = -1e300;
  Rng rollout_rng(algo.config().seed * 48611 + 5);

  int episodes_done = 0;
  while (episodes_done < total_episodes) {
    const int batch = std::min(algo.config().parallel_envs, total_episodes - episodes_done);
    std::vector<std::unique_ptr<Env>> envs;
    std::vector<Env*> env_ptrs;
    for (int j = 0; j < batch; ++j) {
      envs.push_back(env_factory(episodes_done + j));
      env_ptrs.push_back(envs.back().get());
    }
    const RolloutBuffer buffer = algo.collect_rollout(env_ptrs, rollout_rng);

    for (const auto& env : envs) {
      const EpisodeStats stats = summarize_episode(env->episode_log());
      if (stats.mean_qoe > result.best_mean_qoe) {
        result.best_mean_qoe = stats.mean_qoe;
        if (!checkpoint_path.empty()) algo.save(checkpoint_path);
      }
      result.curve.push_back(stats);
    }

    algo.update(buffer);
    episodes_done += batch;
  }
  return result;
}

void write_learning_curve(const std::string& path, const std::vector<EpisodeStats>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("learning curve: cannot write " + path);
  out.precision(17);
  out << "# episode mean_qoe q1 q2 q3 q4 freeze_freq\n";
  for (size_t i = 0; i < curve.size(); ++i) {
    const auto& s = curve[i];
    out << i << ' ' << s.mean_qoe << ' ' << s.viewport_quality << ' ' << s.temporal_variation
        << ' ' << s.spatial_variation << ' ' << s.rebuffer_s << ' ' << s.freeze_freq << '\n';
  }
}

}  // namespace vstream
