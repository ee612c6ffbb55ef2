#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "vstream/attention.hpp"
#include "vstream/gradcheck.hpp"
#include "vstream/rng.hpp"

using namespace vstream;

namespace {

AttentionConfig tiny_config(uint64_t seed = 1) {
  AttentionConfig cfg;
  cfg.frame_h = 2;
  cfg.frame_w = 4;
  cfg.frame_c = 1;
  cfg.patch_h = 2;
  cfg.patch_w = 2;
  cfg.frames = 2;
  cfg.history = 2;
  cfg.horizon = 2;
  cfg.classes = 6;
  cfg.embed_dim = 6;
  cfg.heads = 2;
  cfg.spatial_blocks = 1;
  cfg.temporal_blocks = 1;
  cfg.viewpoint_blocks = 1;
  cfg.decoder_blocks = 1;
  cfg.ffn_hidden = 8;
  cfg.seed = seed;
  return cfg;
}

AttentionConfig desk_config(uint64_t seed = 2) {
  AttentionConfig cfg;  // embed 32, 4 heads, 2+2+1+1 blocks, K = 64
  cfg.seed = seed;
  return cfg;
}

std::vector<Mat> random_frames(const AttentionConfig& cfg, Rng& rng) {
  std::vector<Mat> frames;
  for (int f = 0; f < cfg.frames; ++f) {
    Mat m(cfg.frame_h, cfg.frame_w * cfg.frame_c);
    for (double& x : m.v) x = rng.normal();
    frames.push_back(std::move(m));
  }
  return frames;
}

std::vector<int> random_ids(int len, int classes, Rng& rng) {
  std::vector<int> ids(len);
  for (int& id : ids) id = rng.uniform_int(classes);
  return ids;
}

Codebook grid_codebook(int k, uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec3> pts;
  while (static_cast<int>(pts.size()) < 8 * k) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    if (v.norm() > 1e-6) pts.push_back(v.normalized());
  }
  return kmeans_fit(pts, k, seed);
}

}  // namespace

TEST_CASE("scaled attention weights: hand cases") {
  SUBCASE("all keys identical gives uniform rows") {
    Mat q(3, 4), k(5, 4);
    Rng rng(11);
    for (double& x : q.v) x = rng.normal();
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 5; ++i) k(i, j) = 0.37 * (j + 1);
    const Mat w = spatial_attention(q, k, 4.0);
    for (int i = 0; i < w.rows; ++i)
      for (int j = 0; j < w.cols; ++j) CHECK(w(i, j) == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("single key gets weight 1") {
    Mat q(2, 3, 0.5), k(1, 3, -1.0);
    const Mat w = temporal_attention(q, k, 3.0);
    CHECK(w.rows == 2);
    CHECK(w.cols == 1);
    CHECK(w(0, 0) == 1.0);
    CHECK(w(1, 0) == 1.0);
  }
  SUBCASE("two keys with dot products (2, 0) at d_k = 4") {
    // softmax(1, 0) = (e / (e + 1), 1 / (e + 1)) ~ (0.731, 0.269)
    Mat q(1, 2), k(2, 2);
    q(0, 0) = 2.0;
    q(0, 1) = 0.0;
    k(0, 0) = 1.0;
    k(0, 1) = 0.0;
    k(1, 0) = 0.0;
    k(1, 1) = 1.0;
    const Mat w = spatial_attention(q, k, 4.0);
    CHECK(w(0, 0) == doctest::Approx(0.731).epsilon(1e-3));
    CHECK(w(0, 1) == doctest::Approx(0.269).epsilon(1e-3));
  }
}

TEST_CASE("attention rows are simplexes and scaling invariance holds") {
  Rng rng(21);
  for (int iter = 0; iter < 50; ++iter) {
    const int tokens = 1 + rng.uniform_int(6);
    const int width = 1 + rng.uniform_int(6);
    Mat q(tokens, width), k(tokens, width);
    for (double& x : q.v) x = rng.normal();
    for (double& x : k.v) x = rng.normal();
    const double dk = width;
    const Mat w = spatial_attention(q, k, dk);
    for (int i = 0; i < w.rows; ++i) {
      double sum = 0.0;
      for (int j = 0; j < w.cols; ++j) {
        CHECK(w(i, j) >= 0.0);
        CHECK(w(i, j) <= 1.0);
        sum += w(i, j);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
    // scaling queries and keys by (dk'/dk)^(1/4) with dk -> dk' leaves weights unchanged
    const double dk2 = dk * 4.0;
    const double s = std::pow(dk2 / dk, 0.25);
    Mat q2 = q, k2 = k;
    for (double& x : q2.v) x *= s;
    for (double& x : k2.v) x *= s;
    const Mat w2 = spatial_attention(q2, k2, dk2);
    for (int i = 0; i < w.size(); ++i) CHECK(w.v[i] == doctest::Approx(w2.v[i]).epsilon(1e-9));
  }
  CHECK_THROWS_AS(spatial_attention(Mat(2, 3), Mat(2, 4), 3.0), std::invalid_argument);
  CHECK_THROWS_AS(spatial_attention(Mat(2, 3), Mat(2, 3), 0.0), std::invalid_argument);
}

TEST_CASE("fresh model emits uniform simplex rows of shape horizon x classes") {
  AttentionConfig cfg = tiny_config();
  cfg.horizon = 5;
  cfg.classes = 64 / 4;  // keep the tiny geometry but a non-trivial class count
  AttentionModel model(cfg);
  Rng rng(31);
  const auto frames = random_frames(cfg, rng);
  const auto history = random_ids(cfg.history, cfg.classes, rng);
  const Mat probs = model.forward(frames, history);
  CHECK(probs.rows == cfg.horizon);
  CHECK(probs.cols == cfg.classes);
  for (int s = 0; s < probs.rows; ++s) {
    double sum = 0.0;
    for (int j = 0; j < probs.cols; ++j) {
      // zero-initialized classifier head: exactly uniform
      CHECK(probs(s, j) == doctest::Approx(1.0 / cfg.classes).epsilon(1e-9));
      sum += probs(s, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("output rows stay simplexes after training steps") {
  AttentionConfig cfg = tiny_config(5);
  AttentionModel model(cfg);
  Rng rng(41);
  std::vector<TrainingSample> batch;
  for (int i = 0; i < 4; ++i) {
    TrainingSample s;
    s.frames = random_frames(cfg, rng);
    s.history = random_ids(cfg.history, cfg.classes, rng);
    s.targets = random_ids(cfg.horizon, cfg.classes, rng);
    batch.push_back(std::move(s));
  }
  for (int step = 0; step < 5; ++step) model.train_step(batch, 1e-3);
  const Mat probs = model.forward(batch[0].frames, batch[0].history);
  for (int s = 0; s < probs.rows; ++s) {
    double sum = 0.0;
    for (int j = 0; j < probs.cols; ++j) sum += probs(s, j);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("uniform-output model scores ln K cross entropy") {
  AttentionConfig cfg = desk_config();
  AttentionModel model(cfg);
  Rng rng(51);
  std::vector<TrainingSample> batch;
  TrainingSample s;
  s.frames = random_frames(cfg, rng);
  s.history = random_ids(cfg.history, cfg.classes, rng);
  s.targets = random_ids(cfg.horizon, cfg.classes, rng);
  batch.push_back(s);
  CHECK(model.loss(batch) == doctest::Approx(std::log(64.0)).epsilon(1e-3));
}

TEST_CASE("shape errors are rejected") {
  AttentionConfig cfg = tiny_config(6);
  AttentionModel model(cfg);
  Rng rng(61);
  auto frames = random_frames(cfg, rng);
  const auto history = random_ids(cfg.history, cfg.classes, rng);
  SUBCASE("wrong frame count") {
    frames.pop_back();
    CHECK_THROWS_AS(model.forward(frames, history), std::invalid_argument);
  }
  SUBCASE("wrong frame shape") {
    frames[0] = Mat(3, 4);
    CHECK_THROWS_AS(model.forward(frames, history), std::invalid_argument);
  }
  SUBCASE("history class out of range") {
    CHECK_THROWS_AS(model.forward(frames, {0, 99}), std::invalid_argument);
  }
  SUBCASE("bad config") {
    AttentionConfig bad = cfg;
    bad.patch_h = 3;  // does not tile the frame
    CHECK_THROWS_AS((void)AttentionModel{bad}, std::invalid_argument);
  }
}

TEST_CASE("forward is deterministic given parameters") {
  AttentionConfig cfg = tiny_config(7);
  AttentionModel model(cfg);
  Rng rng(71);
  const auto frames = random_frames(cfg, rng);
  const auto history = random_ids(cfg.history, cfg.classes, rng);
  const Mat p1 = model.forward(frames, history);
  const Mat p2 = model.forward(frames, history);
  CHECK(p1.v == p2.v);
}

TEST_CASE("analytic gradients match central finite differences (<= 2k params)") {
  AttentionConfig cfg = tiny_config(8);
  AttentionModel model(cfg);
  REQUIRE(model.params().scalar_count() <= 2000);
  Rng rng(81);
  std::vector<TrainingSample> batch;
  TrainingSample s;
  s.frames = random_frames(cfg, rng);
  s.history = random_ids(cfg.history, cfg.classes, rng);
  s.targets = random_ids(cfg.horizon, cfg.classes, rng);
  batch.push_back(s);

  const double loss = model.loss_and_grad(batch);
  CHECK(std::isfinite(loss));
  const auto analytic = model.params().flat_grads();
  auto loss_fn = [&]() { return model.loss(batch); };
  const auto numeric = nn::finite_difference_grad(model.params(), loss_fn);
  const auto cmp = nn::compare_grads(analytic, numeric);
  CHECK(cmp.max_rel_error <= 1e-4);
}

TEST_CASE("memorizes a small sample set quickly") {
  AttentionConfig cfg = tiny_config(9);
  cfg.classes = 8;
  AttentionModel model(cfg);
  Rng rng(91);
  std::vector<TrainingSample> batch;
  for (int i = 0; i < 8; ++i) {
    TrainingSample s;
    s.frames = random_frames(cfg, rng);
    s.history = random_ids(cfg.history, cfg.classes, rng);
    s.targets = random_ids(cfg.horizon, cfg.classes, rng);
    batch.push_back(std::move(s));
  }
  double loss = 1e9;
  for (int step = 0; step < 200 && loss >= 0.05; ++step) loss = model.train_step(batch, 0.01);
  CHECK(loss < 0.05);
}

TEST_CASE("train_step returns the pre-update loss and rejects non-finite batches") {
  AttentionConfig cfg = tiny_config(10);
  AttentionModel model(cfg);
  Rng rng(101);
  std::vector<TrainingSample> batch;
  TrainingSample s;
  s.frames = random_frames(cfg, rng);
  s.history = random_ids(cfg.history, cfg.classes, rng);
  s.targets = random_ids(cfg.horizon, cfg.classes, rng);
  batch.push_back(s);

  const double before = model.loss(batch);
  const double reported = model.train_step(batch, 1e-3);
  CHECK(reported == doctest::Approx(before).epsilon(1e-12));

  const auto snapshot = model.params().flat_values();
  auto bad = batch;
  bad[0].frames[0](0, 0) = std::nan("");
  CHECK_THROWS_AS(model.train_step(bad, 1e-3), std::runtime_error);
  // no update was applied
  CHECK(model.params().flat_values() == snapshot);
}

TEST_CASE("top_i_decode follows the scripted step function") {
  Codebook cb = grid_codebook(3, 5);
  // first step (0.5, 0.3, 0.2); afterwards always argmax class 1
  const StepProbFn step = [](const std::vector<int>& prefix) -> std::vector<double> {
    if (prefix.empty()) return {0.5, 0.3, 0.2};
    return {0.1, 0.8, 0.1};
  };
  SUBCASE("top-2 trajectory probabilities read off the first-step simplex") {
    const PredictionSet out = top_i_decode(step, 2, cb, 4);
    REQUIRE(out.count() == 2);
    CHECK(out.probabilities[0] == 0.5);
    CHECK(out.probabilities[1] == 0.3);
    CHECK((out.trajectories[0][0] - cb.centroids[0]).norm() < 1e-12);
    CHECK((out.trajectories[1][0] - cb.centroids[1]).norm() < 1e-12);
    for (int i = 0; i < 2; ++i)
      for (size_t r = 1; r < out.trajectories[i].size(); ++r)
        CHECK((out.trajectories[i][r] - cb.centroids[1]).norm() < 1e-12);
  }
  SUBCASE("top-1 equals greedy decoding") {
    const PredictionSet out = top_i_decode(step, 1, cb, 3);
    REQUIRE(out.count() == 1);
    CHECK(out.probabilities[0] == 0.5);
  }
  SUBCASE("invariants: descending and bounded by one") {
    const PredictionSet out = top_i_decode(step, 3, cb, 2);
    double total = 0.0;
    for (size_t i = 0; i < out.probabilities.size(); ++i) {
      if (i) CHECK(out.probabilities[i] <= out.probabilities[i - 1]);
      total += out.probabilities[i];
    }
    CHECK(total <= 1.0 + 1e-9);
  }
  SUBCASE("rejects malformed simplexes") {
    const StepProbFn bad = [](const std::vector<int>&) -> std::vector<double> {
      return {0.5, 0.1, 0.1};
    };
    CHECK_THROWS_AS(top_i_decode(bad, 1, cb, 2), std::invalid_argument);
  }
}

TEST_CASE("model predict produces a valid prediction set") {
  AttentionConfig cfg = tiny_config(12);
  AttentionModel model(cfg);
  Codebook cb = grid_codebook(cfg.classes, 13);
  Rng rng(121);
  const auto frames = random_frames(cfg, rng);
  const auto history = random_ids(cfg.history, cfg.classes, rng);
  const PredictionSet out = model.predict(frames, history, 3, cb);
  out.validate();
  CHECK(out.count() == 3);
  CHECK(static_cast<int>(out.trajectories[0].size()) == cfg.horizon);
}

TEST_CASE("checkpoint round trip preserves behaviour") {
  AttentionConfig cfg = tiny_config(14);
  AttentionModel model(cfg);
  Rng rng(141);
  std::vector<TrainingSample> batch;
  TrainingSample s;
  s.frames = random_frames(cfg, rng);
  s.history = random_ids(cfg.history, cfg.classes, rng);
  s.targets = random_ids(cfg.horizon, cfg.classes, rng);
  batch.push_back(s);
  for (int i = 0; i < 3; ++i) model.train_step(batch, 1e-3);
  model.save("test_attention_ckpt.bin");

  AttentionModel fresh(cfg);
  fresh.load("test_attention_ckpt.bin");
  const Mat a = model.forward(batch[0].frames, batch[0].history);
  const Mat b = fresh.forward(batch[0].frames, batch[0].history);
  CHECK(a.v == b.v);
  std::remove("test_attention_ckpt.bin");
}
