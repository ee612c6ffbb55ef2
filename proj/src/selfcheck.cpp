#include "vstream/selfcheck.hpp"

#include <cmath>
#include <sstream>

#include "vstream/env.hpp"
#include "vstream/fixtures.hpp"
#include "vstream/gradcheck.hpp"
#include "vstream/mappo.hpp"
#include "vstream/nets.hpp"
#include "vstream/partition.hpp"
#include "vstream/qoe.hpp"
#include "vstream/rng.hpp"

namespace vstream {

namespace {

CheckResult check_qoe(uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    const int regions = 1 + rng.uniform_int(4);
    std::vector<double> psi(regions), q(regions), qp(regions);
    double mass = 0.0;
    for (int i = 0; i < regions; ++i) {
      psi[i] = rng.uniform(0.01, 1.0);
      mass += psi[i];
    }
    for (int i = 0; i < regions; ++i) psi[i] /= mass;
    std::sort(psi.begin(), psi.end(), std::greater<>());
    for (int i = 0; i < regions; ++i) {
      q[i] = rng.uniform(0.5, 40.0);
      qp[i] = rng.uniform(0.5, 40.0);
    }
    const double reb = rng.uniform(0.0, 4.0);
    QoEWeights w;
    w.quality = rng.uniform(0.0, 2.0);
    w.temporal_penalty = rng.uniform(0.0, 2.0);
    w.spatial_penalty = rng.uniform(0.0, 2.0);
    w.rebuffer_penalty = rng.uniform(0.0, 2.0);

    const QoEBreakdown got = qoe_total(w, psi, q, qp, reb);

    // direct recomputation, different loop structure
    double q1 = 0.0, q2 = 0.0, q3 = 0.0;
    for (int i = 0; i < regions; ++i) q1 += psi[i] * q[i];
    for (int i = 0; i < regions; ++i) q2 += psi[i] * std::abs(q[i] - qp[i]);
    for (int i = 0; i < regions; ++i)
      for (int j = i + 1; j < regions; ++j) q3 += psi[i] * psi[j] * std::abs(q[i] - q[j]);
    const double expect = w.quality * q1 - w.temporal_penalty * q2 - w.spatial_penalty * q3 -
                          w.rebuffer_penalty * reb;
    worst = std::max(worst, std::abs(got.total - expect));
  }
  CheckResult r{"qoe arithmetic vs direct recomputation", worst <= 1e-12, ""};
  std::ostringstream d;
  d << "max abs error " << worst;
  r.detail = d.str();
  return r;
}

CheckResult check_returns(uint64_t seed) {
  Rng rng(seed + 1);
  double worst = 0.0;
  for (int iter = 0; iter < 300; ++iter) {
    const int n = 1 + rng.uniform_int(16);
    std::vector<double> rew(n), val(n);
    for (int i = 0; i < n; ++i) {
      rew[i] = rng.uniform(-2.0, 2.0);
      val[i] = rng.uniform(-2.0, 2.0);
    }
    const double gamma = rng.uniform(0.5, 1.0);
    const double lambda = rng.uniform(0.0, 1.0);
    const double bootstrap = rng.uniform(-2.0, 2.0);

    const auto adv = gae(rew, val, bootstrap, gamma, lambda);
    // brute-force double sum of discounted TD residuals
    for (int t = 0; t < n; ++t) {
      double expect = 0.0;
      for (int l = 0; t + l < n; ++l) {
        const double next = (t + l + 1 < n) ? val[t + l + 1] : bootstrap;
        const double delta = rew[t + l] + gamma * next - val[t + l];
        expect += std::pow(gamma * lambda, l) * delta;
      }
      worst = std::max(worst, std::abs(adv[t] - expect));
    }
    // lambda = 1 identity against returns - values
    const auto adv1 = gae(rew, val, bootstrap, gamma, 1.0);
    const auto ret = discounted_returns(rew, bootstrap, gamma);
    for (int t = 0; t < n; ++t)
      worst = std::max(worst, std::abs(adv1[t] - (ret[t] - val[t])));
  }
  CheckResult r{"returns and GAE vs brute force", worst <= 1e-9, ""};
  std::ostringstream d;
  d << "max abs error " << worst;
  r.detail = d.str();
  return r;
}

CheckResult check_download(uint64_t seed) {
  Rng rng(seed + 2);
  double worst = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    const int n = 1 + rng.uniform_int(6);
    std::vector<double> times{0.0}, thr;
    for (int i = 1; i < n; ++i) times.push_back(times.back() + rng.uniform(0.2, 3.0));
    for (int i = 0; i < n; ++i) thr.push_back(rng.uniform(0.5, 20.0));
    const NetworkTrace tr = make_trace(times, thr);
    const double size = rng.uniform(0.1, 60.0);
    const double start = rng.uniform(0.0, 10.0);
    const double got = download_time(size, tr, start);

    // bisection on the piecewise forward integral of the step function
    auto integral = [&](double tau) {
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
    };
    double lo = 0.0, hi = 1.0;
    while (integral(hi) < size) hi *= 2.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (integral(mid) < size)
        lo = mid;
      else
        hi = mid;
    }
    worst = std::max(worst, std::abs(got - 0.5 * (lo + hi)));
  }
  CheckResult r{"download-time inversion vs integral bisection", worst <= 1e-9, ""};
  std::ostringstream d;
  d << "max abs error " << worst;
  r.detail = d.str();
  return r;
}

CheckResult check_partition(uint64_t seed) {
  Rng rng(seed + 3);
  const TileGrid grid{6, 12};
  bool ok = true;
  std::string detail = "1000 random prediction sets partition exactly";
  for (int iter = 0; iter < 1000 && ok; ++iter) {
    const int agents = 1 + rng.uniform_int(4);
    PredictionSet preds;
    std::vector<double> probs(agents);
    double total = 0.0;
    for (int i = 0; i < agents; ++i) {
      probs[i] = rng.uniform(0.05, 1.0);
      total += probs[i];
    }
    for (double& p : probs) p /= total;
    std::sort(probs.begin(), probs.end(), std::greater<>());
    for (int i = 0; i < agents; ++i) {
      preds.probabilities.push_back(probs[i]);
      preds.trajectories.push_back(
          {from_lat_lon_deg(rng.uniform(-90.0, 90.0), rng.uniform(-180.0, 180.0))});
    }
    try {
      const RegionAssignment part = partition(preds, grid, Fov{100.0, 100.0});
      part.validate(grid.tiles());
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
  }
  return CheckResult{"tile partition exactness", ok, detail};
}

CheckResult check_gradients(uint64_t seed) {
  NetConfig cfg;
  cfg.input_dim = 7;
  cfg.hidden = {8};
  cfg.output_dim = 4;
  cfg.softmax_head = true;
  cfg.seed = seed + 4;
  FeedForwardNet net(cfg);

  Rng rng(seed + 5);
  Mat inputs(3, cfg.input_dim);
  for (double& x : inputs.v) x = rng.uniform(-1.0, 1.0);
  std::vector<int> targets{1, 3, 0};

  auto loss_fn = [&]() {
    nn::Graph g;
    const auto logits = net.forward_logits_graph(g, inputs);
    return g.value(g.cross_entropy_logits(logits, targets))(0, 0);
  };
  net.params().zero_grad();
  {
    nn::Graph g;
    const auto logits = net.forward_logits_graph(g, inputs);
    g.backward(g.cross_entropy_logits(logits, targets));
  }
  const auto numeric = nn::finite_difference_grad(net.params(), loss_fn);
  const auto res = nn::compare_grads(net.params().flat_grads(), numeric);
  CheckResult r{"backprop vs central finite differences", res.max_rel_error <= 1e-6, ""};
  std::ostringstream d;
  d << "max rel error " << res.max_rel_error;
  r.detail = d.str();
  return r;
}

}  // namespace

std::vector<CheckResult> run_self_checks(uint64_t seed) {
  return {check_qoe(seed), check_returns(seed), check_download(seed), check_partition(seed),
          check_gradients(seed)};
}

}  // namespace vstream
