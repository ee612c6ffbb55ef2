#include "vstream/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "vstream/rng.hpp"

namespace vstream {

Mat scaled_attention_weights(const Mat& queries, const Mat& keys, double d_k) {
  if (queries.cols != keys.cols)
    throw std::invalid_argument("attention: query/key width mismatch");
  if (!(d_k > 0.0)) throw std::invalid_argument("attention: d_k must be positive");
  const double inv = 1.0 / std::sqrt(d_k);
  Mat w(queries.rows, keys.rows);
  for (int i = 0; i < queries.rows; ++i) {
    double m = -1e300;
    for (int j = 0; j < keys.rows; ++j) {
      double s = 0.0;
      for (int c = 0; c < queries.cols; ++c) s += queries(i, c) * keys(j, c);
      w(i, j) = s * inv;
      m = std::max(m, w(i, j));
    }
    double sum = 0.0;
    for (int j = 0; j < keys.rows; ++j) {
      w(i, j) = std::exp(w(i, j) - m);
      sum += w(i, j);
    }
    for (int j = 0; j < keys.rows; ++j) w(i, j) /= sum;
  }
  return w;
}

PredictionSet top_i_decode(const StepProbFn& step, int top_i, const Codebook& codebook,
                           int horizon) {
  if (top_i <= 0) throw std::invalid_argument("top_i_decode: top_i must be positive");
  if (horizon <= 0) throw std::invalid_argument("top_i_decode: horizon must be positive");
  const std::vector<double> first = step({});
  const int k = static_cast<int>(first.size());
  if (k != codebook.size())
    throw std::invalid_argument("top_i_decode: probability width != codebook size");
  if (top_i > k) throw std::invalid_argument("top_i_decode: top_i exceeds class count");
  double sum = 0.0;
  for (double p : first) {
    if (!(p >= 0.0)) throw std::invalid_argument("top_i_decode: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("top_i_decode: first-step probabilities not a simplex");

  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return first[a] > first[b]; });

  PredictionSet out;
  for (int i = 0; i < top_i; ++i) {
    const int cls = order[i];
    std::vector<int> tokens{cls};
    while (static_cast<int>(tokens.size()) < horizon) {
      const std::vector<double> p = step(tokens);
      if (static_cast<int>(p.size()) != k)
        throw std::invalid_argument("top_i_decode: step width changed");
      int arg = 0;
      for (int j = 1; j < k; ++j)
        if (p[j] > p[arg]) arg = j;
      tokens.push_back(arg);
    }
    std::vector<Vec3> traj;
    traj.reserve(tokens.size());
    for (int t : tokens) traj.push_back(codebook.centroids[t]);
    out.trajectories.push_back(std::move(traj));
    out.probabilities.push_back(first[cls]);
  }
  out.validate();
  return out;
}

void AttentionConfig::validate() const {
  if (frame_h <= 0 || frame_w <= 0 || frame_c <= 0)
    throw std::invalid_argument("attention config: bad frame shape");
  if (patch_h <= 0 || patch_w <= 0 || frame_h % patch_h != 0 || frame_w % patch_w != 0)
    throw std::invalid_argument("attention config: patches must tile the frame");
  if (frames <= 0 || history <= 0 || horizon <= 0)
    throw std::invalid_argument("attention config: sequence lengths must be positive");
  if (classes <= 0) throw std::invalid_argument("attention config: classes must be positive");
  if (embed_dim <= 0 || heads <= 0 || embed_dim % heads != 0)
    throw std::invalid_argument("attention config: embed_dim must be divisible by heads");
  if (spatial_blocks < 0 || temporal_blocks < 0 || viewpoint_blocks < 0 || decoder_blocks <= 0)
    throw std::invalid_argument("attention config: bad block counts");
  if (ffn_hidden <= 0) throw std::invalid_argument("attention config: ffn_hidden must be positive");
}

Mat patchify(const Mat& frame, const AttentionConfig& cfg) {
  if (frame.rows != cfg.frame_h || frame.cols != cfg.frame_w * cfg.frame_c)
    throw std::invalid_argument("patchify: frame shape mismatch");
  Mat out(cfg.patches(), cfg.patch_dim());
  int patch = 0;
  for (int gy = 0; gy < cfg.patches_y(); ++gy)
    for (int gx = 0; gx < cfg.patches_x(); ++gx, ++patch) {
      int idx = 0;
      for (int y = 0; y < cfg.patch_h; ++y)
        for (int x = 0; x < cfg.patch_w; ++x)
          for (int c = 0; c < cfg.frame_c; ++c)
            out(patch, idx++) =
                frame(gy * cfg.patch_h + y, (gx * cfg.patch_w + x) * cfg.frame_c + c);
    }
  return out;
}

// ---------------------------------------------------------------------------

struct AttentionModel::GraphCtx {
  nn::Graph g;
  std::unordered_map<nn::Parameter*, nn::Graph::Ref> leaves;

  nn::Graph::Ref leaf(nn::Parameter& p) {
    auto it = leaves.find(&p);
    if (it != leaves.end()) return it->second;
    const auto r = g.param(p);
    leaves.emplace(&p, r);
    return r;
  }
};

namespace {

Mat causal_mask(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = 1.0;
  return m;
}

Mat small_normal(int rows, int cols, uint64_t seed, double scale = 0.02) {
  Rng rng(seed);
  Mat m(rows, cols);
  for (double& x : m.v) x = rng.normal() * scale;
  return m;
}

}  // namespace

AttentionModel::AttentionModel(AttentionConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.embed_dim;
  uint64_t salt = cfg_.seed * 7919 + 1;
  auto next = [&salt]() { return ++salt; };

  params_.add("patch_embed.w", nn::xavier_init(cfg_.patch_dim(), d, next()));
  params_.add("patch_embed.b", Mat(1, d));
  params_.add("pos_spatial", small_normal(cfg_.patches(), d, next()));
  params_.add("pos_temporal", small_normal(cfg_.frames, d, next()));
  params_.add("pos_history", small_normal(cfg_.history, d, next()));
  params_.add("pos_decoder", small_normal(cfg_.horizon, d, next()));
  // row `classes` is the start-of-sequence token
  params_.add("token_embed", small_normal(cfg_.classes + 1, d, next()));

  const int dh = d / cfg_.heads;
  auto add_attention = [&](const std::string& prefix) {
    for (int h = 0; h < cfg_.heads; ++h) {
      const std::string hp = prefix + ".h" + std::to_string(h);
      params_.add(hp + ".wq", nn::xavier_init(d, dh, next()));
      params_.add(hp + ".bq", Mat(1, dh));
      params_.add(hp + ".wk", nn::xavier_init(d, dh, next()));
      params_.add(hp + ".bk", Mat(1, dh));
      params_.add(hp + ".wv", nn::xavier_init(d, dh, next()));
      params_.add(hp + ".bv", Mat(1, dh));
      params_.add(hp + ".wo", nn::xavier_init(dh, d, next()));
    }
    params_.add(prefix + ".bo", Mat(1, d));
  };
  auto add_ln = [&](const std::string& prefix) {
    params_.add(prefix + ".g", Mat(1, d, 1.0));
    params_.add(prefix + ".b", Mat(1, d));
  };
  auto add_ffn = [&](const std::string& prefix) {
    params_.add(prefix + ".w1", nn::xavier_init(d, cfg_.ffn_hidden, next()));
    params_.add(prefix + ".b1", Mat(1, cfg_.ffn_hidden));
    params_.add(prefix + ".w2", nn::xavier_init(cfg_.ffn_hidden, d, next()));
    params_.add(prefix + ".b2", Mat(1, d));
  };
  auto add_encoder_block = [&](const std::string& prefix) {
    add_ln(prefix + ".ln1");
    add_attention(prefix + ".attn");
    add_ln(prefix + ".ln2");
    add_ffn(prefix + ".ffn");
  };

  for (int i = 0; i < cfg_.spatial_blocks; ++i) add_encoder_block("spatial" + std::to_string(i));
  for (int i = 0; i < cfg_.temporal_blocks; ++i) add_encoder_block("temporal" + std::to_string(i));
  for (int i = 0; i < cfg_.viewpoint_blocks; ++i) add_encoder_block("viewenc" + std::to_string(i));
  for (int i = 0; i < cfg_.decoder_blocks; ++i) {
    const std::string prefix = "decoder" + std::to_string(i);
    add_ln(prefix + ".ln1");
    add_attention(prefix + ".attn");
    add_ln(prefix + ".ln2");
    add_attention(prefix + ".cross");
    add_ln(prefix + ".ln3");
    add_ffn(prefix + ".ffn");
  }
  add_ln("head.ln");
  // zero-initialized classifier head: a fresh model emits uniform probabilities
  params_.add("head.w", Mat(d, cfg_.classes));
  params_.add("head.b", Mat(1, cfg_.classes));
}

nn::Graph::Ref AttentionModel::layer_norm(GraphCtx& ctx, const std::string& prefix,
                                          nn::Graph::Ref x) {
  return ctx.g.layer_norm_rows(x, ctx.leaf(*params_.find(prefix + ".g")),
                               ctx.leaf(*params_.find(prefix + ".b")));
}

nn::Graph::Ref AttentionModel::attention_sum(GraphCtx& ctx, const std::string& prefix,
                                             nn::Graph::Ref q_in, nn::Graph::Ref kv_in,
                                             const Mat* allow) {
  nn::Graph& g = ctx.g;
  const int dh = cfg_.embed_dim / cfg_.heads;
  nn::Graph::Ref out = -1;
  for (int h = 0; h < cfg_.heads; ++h) {
    const std::string hp = prefix + ".h" + std::to_string(h);
    const auto q = g.linear(q_in, ctx.leaf(*params_.find(hp + ".wq")),
                            ctx.leaf(*params_.find(hp + ".bq")));
    const auto k = g.linear(kv_in, ctx.leaf(*params_.find(hp + ".wk")),
                            ctx.leaf(*params_.find(hp + ".bk")));
    const auto v = g.linear(kv_in, ctx.leaf(*params_.find(hp + ".wv")),
                            ctx.leaf(*params_.find(hp + ".bv")));
    const auto scores = g.scale(g.matmul(q, g.transpose(k)), 1.0 / std::sqrt(double(dh)));
    const auto w = allow ? g.masked_softmax_rows(scores, *allow) : g.softmax_rows(scores);
    const auto ctxv = g.matmul(w, v);
    const auto head_out = g.matmul(ctxv, ctx.leaf(*params_.find(hp + ".wo")));
    out = (out < 0) ? head_out : g.add(out, head_out);
  }
  return g.add_rowvec(out, ctx.leaf(*params_.find(prefix + ".bo")));
}

nn::Graph::Ref AttentionModel::ffn(GraphCtx& ctx, const std::string& prefix, nn::Graph::Ref x) {
  nn::Graph& g = ctx.g;
  const auto h = g.gelu(g.linear(x, ctx.leaf(*params_.find(prefix + ".w1")),
                                 ctx.leaf(*params_.find(prefix + ".b1"))));
  return g.linear(h, ctx.leaf(*params_.find(prefix + ".w2")),
                  ctx.leaf(*params_.find(prefix + ".b2")));
}

nn::Graph::Ref AttentionModel::encoder_block(GraphCtx& ctx, const std::string& prefix,
                                             nn::Graph::Ref x) {
  nn::Graph& g = ctx.g;
  const auto n1 = layer_norm(ctx, prefix + ".ln1", x);
  const auto a = g.add(x, attention_sum(ctx, prefix + ".attn", n1, n1, nullptr));
  const auto n2 = layer_norm(ctx, prefix + ".ln2", a);
  return g.add(a, ffn(ctx, prefix + ".ffn", n2));
}

void AttentionModel::check_inputs(const std::vector<Mat>& frames,
                                  const std::vector<int>& history) const {
  if (static_cast<int>(frames.size()) != cfg_.frames)
    throw std::invalid_argument("attention: frame count mismatch");
  for (const auto& f : frames)
    if (f.rows != cfg_.frame_h || f.cols != cfg_.frame_w * cfg_.frame_c)
      throw std::invalid_argument("attention: frame shape mismatch");
  if (static_cast<int>(history.size()) != cfg_.history)
    throw std::invalid_argument("attention: history length mismatch");
  for (int id : history)
    if (id < 0 || id >= cfg_.classes)
      throw std::invalid_argument("attention: history class out of range");
}

nn::Graph::Ref AttentionModel::encode(GraphCtx& ctx, const std::vector<Mat>& frames,
                                      const std::vector<int>& history) {
  check_inputs(frames, history);
  nn::Graph& g = ctx.g;

  // visual encoder: spatial attention within each frame, then pooled frame
  // tokens through the temporal blocks
  std::vector<nn::Graph::Ref> frame_tokens;
  for (const Mat& frame : frames) {
    auto x = g.linear(g.constant(patchify(frame, cfg_)), ctx.leaf(*params_.find("patch_embed.w")),
                      ctx.leaf(*params_.find("patch_embed.b")));
    x = g.add(x, ctx.leaf(*params_.find("pos_spatial")));
    for (int b = 0; b < cfg_.spatial_blocks; ++b)
      x = encoder_block(ctx, "spatial" + std::to_string(b), x);
    frame_tokens.push_back(g.mean_rows(x));
  }
  auto temporal = g.add(g.concat_rows(frame_tokens), ctx.leaf(*params_.find("pos_temporal")));
  for (int b = 0; b < cfg_.temporal_blocks; ++b)
    temporal = encoder_block(ctx, "temporal" + std::to_string(b), temporal);

  // viewpoint encoder over history class tokens
  auto vp = g.add(g.embed_rows(ctx.leaf(*params_.find("token_embed")), history),
                  ctx.leaf(*params_.find("pos_history")));
  for (int b = 0; b < cfg_.viewpoint_blocks; ++b)
    vp = encoder_block(ctx, "viewenc" + std::to_string(b), vp);

  return g.concat_rows({temporal, vp});
}

nn::Graph::Ref AttentionModel::decode_logits(GraphCtx& ctx, nn::Graph::Ref memory,
                                             const std::vector<int>& input_ids) {
  nn::Graph& g = ctx.g;
  const int len = static_cast<int>(input_ids.size());
  if (len <= 0 || len > cfg_.horizon)
    throw std::invalid_argument("attention: decoder length out of range");

  auto x = g.add(g.embed_rows(ctx.leaf(*params_.find("token_embed")), input_ids),
                 g.slice_rows(ctx.leaf(*params_.find("pos_decoder")), 0, len));
  const Mat mask = causal_mask(len);
  for (int b = 0; b < cfg_.decoder_blocks; ++b) {
    const std::string prefix = "decoder" + std::to_string(b);
    const auto n1 = layer_norm(ctx, prefix + ".ln1", x);
    x = g.add(x, attention_sum(ctx, prefix + ".attn", n1, n1, &mask));
    const auto n2 = layer_norm(ctx, prefix + ".ln2", x);
    x = g.add(x, attention_sum(ctx, prefix + ".cross", n2, memory, nullptr));
    const auto n3 = layer_norm(ctx, prefix + ".ln3", x);
    x = g.add(x, ffn(ctx, prefix + ".ffn", n3));
  }
  const auto normed = layer_norm(ctx, "head.ln", x);
  return g.linear(normed, ctx.leaf(*params_.find("head.w")), ctx.leaf(*params_.find("head.b")));
}

nn::Graph::Ref AttentionModel::build_loss(GraphCtx& ctx,
                                          const std::vector<TrainingSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("attention: empty batch");
  nn::Graph::Ref total = -1;
  for (const auto& sample : batch) {
    if (static_cast<int>(sample.targets.size()) != cfg_.horizon)
      throw std::invalid_argument("attention: target length mismatch");
    for (int t : sample.targets)
      if (t < 0 || t >= cfg_.classes)
        throw std::invalid_argument("attention: target class out of range");
    const auto memory = encode(ctx, sample.frames, sample.history);
    // teacher forcing: shift targets right behind the start token
    std::vector<int> input_ids{cfg_.classes};
    input_ids.insert(input_ids.end(), sample.targets.begin(), sample.targets.end() - 1);
    const auto logits = decode_logits(ctx, memory, input_ids);
    const auto ce = ctx.g.cross_entropy_logits(logits, sample.targets);
    total = (total < 0) ? ce : ctx.g.add(total, ce);
  }
  return ctx.g.scale(total, 1.0 / static_cast<double>(batch.size()));
}

double AttentionModel::loss(const std::vector<TrainingSample>& batch) {
  GraphCtx ctx;
  return ctx.g.value(build_loss(ctx, batch))(0, 0);
}

double AttentionModel::loss_and_grad(const std::vector<TrainingSample>& batch) {
  GraphCtx ctx;
  const auto loss_ref = build_loss(ctx, batch);
  const double value = ctx.g.value(loss_ref)(0, 0);
  if (!std::isfinite(value)) throw std::runtime_error("attention: non-finite loss");
  params_.zero_grad();
  ctx.g.backward(loss_ref);
  return value;
}

double AttentionModel::train_step(const std::vector<TrainingSample>& batch,
                                  double learning_rate) {
  const double value = loss_and_grad(batch);
  params_.adam_step(learning_rate);
  return value;
}

Mat AttentionModel::encode_values(const std::vector<Mat>& frames,
                                  const std::vector<int>& history) {
  GraphCtx ctx;
  const auto memory = encode(ctx, frames, history);
  return ctx.g.value(memory);
}

std::vector<double> AttentionModel::step_probs(const Mat& memory,
                                               const std::vector<int>& prefix) {
  if (static_cast<int>(prefix.size()) >= cfg_.horizon)
    throw std::invalid_argument("attention: prefix exceeds horizon");
  std::vector<int> input_ids{cfg_.classes};
  input_ids.insert(input_ids.end(), prefix.begin(), prefix.end());
  GraphCtx ctx;
  const auto logits = decode_logits(ctx, ctx.g.constant(memory), input_ids);
  const auto probs = ctx.g.softmax_rows(logits);
  const Mat& p = ctx.g.value(probs);
  std::vector<double> out(cfg_.classes);
  for (int j = 0; j < cfg_.classes; ++j) out[j] = p(p.rows - 1, j);
  return out;
}

Mat AttentionModel::forward(const std::vector<Mat>& frames, const std::vector<int>& history) {
  const Mat memory = encode_values(frames, history);
  Mat out(cfg_.horizon, cfg_.classes);
  std::vector<int> prefix;
  for (int step = 0; step < cfg_.horizon; ++step) {
    const auto p = step_probs(memory, prefix);
    int arg = 0;
    for (int j = 1; j < cfg_.classes; ++j)
      if (p[j] > p[arg]) arg = j;
    for (int j = 0; j < cfg_.classes; ++j) out(step, j) = p[j];
    prefix.push_back(arg);
  }
  return out;
}

StepProbFn AttentionModel::step_fn(const std::vector<Mat>& frames,
                                   const std::vector<int>& history) {
  const Mat memory = encode_values(frames, history);
  return [this, memory](const std::vector<int>& prefix) { return step_probs(memory, prefix); };
}

PredictionSet AttentionModel::predict(const std::vector<Mat>& frames,
                                      const std::vector<int>& history, int top_i,
                                      const Codebook& codebook) {
  if (codebook.size() != cfg_.classes)
    throw std::invalid_argument("attention: codebook size != classes");
  return top_i_decode(step_fn(frames, history), top_i, codebook, cfg_.horizon);
}

}  // namespace vstream
