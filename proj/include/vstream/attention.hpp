#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vstream/autograd.hpp"
#include "vstream/mat.hpp"
#include "vstream/sphere.hpp"

namespace vstream {

// Row-wise softmax of (q k^T) / sqrt(d_k). Queries and keys are one row per
// token; both must share the key width.
Mat scaled_attention_weights(const Mat& queries, const Mat& keys, double d_k);

// patch tokens of one frame
inline Mat spatial_attention(const Mat& queries, const Mat& keys, double d_k) {
  return scaled_attention_weights(queries, keys, d_k);
}

// frame tokens across time
inline Mat temporal_attention(const Mat& queries, const Mat& keys, double d_k) {
  return scaled_attention_weights(queries, keys, d_k);
}

// Probability vector over classes for the next step given the tokens decoded
// so far (empty prefix = first step).
using StepProbFn = std::function<std::vector<double>(const std::vector<int>& prefix)>;

// Follows the top-I first-step classes, continuing each greedily; trajectory
// probability is the first-step probability of its class.
PredictionSet top_i_decode(const StepProbFn& step, int top_i, const Codebook& codebook,
                           int horizon);

struct AttentionConfig {
  int frame_h = 8, frame_w = 16, frame_c = 1;
  int patch_h = 4, patch_w = 4;
  int frames = 5;    // input frames F
  int history = 5;   // history viewpoints A
  int horizon = 5;   // output steps B
  int classes = 64;  // codebook size K
  int embed_dim = 32;
  int heads = 4;
  int spatial_blocks = 2;
  int temporal_blocks = 2;
  int viewpoint_blocks = 1;
  int decoder_blocks = 1;
  int ffn_hidden = 64;
  uint64_t seed = 1;

  int patches_y() const { return frame_h / patch_h; }
  int patches_x() const { return frame_w / patch_w; }
  int patches() const { return patches_y() * patches_x(); }          // Z
  int patch_dim() const { return patch_h * patch_w * frame_c; }
  void validate() const;
};

struct TrainingSample {
  std::vector<Mat> frames;   // F mats, each frame_h x (frame_w * frame_c)
  std::vector<int> history;  // A class ids
  std::vector<int> targets;  // B class ids
};

// Spatial-temporal attention classifier over viewpoint classes: a visual
// encoder (per-frame spatial attention, then temporal attention over frame
// tokens), a viewpoint encoder over history tokens, and a causal decoder that
// cross-attends to the concatenated encoder outputs.
class AttentionModel {
 public:
  explicit AttentionModel(AttentionConfig cfg);

  const AttentionConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Teacher-forced mean cross-entropy over the batch, Adam update, returns
  // the pre-update loss. A non-finite loss throws and applies no update.
  double train_step(const std::vector<TrainingSample>& batch, double learning_rate);

  // loss only, no update (evaluation, gradient checks)
  double loss(const std::vector<TrainingSample>& batch);
  // loss with the parameter gradient left in params() (pre-zeroed here)
  double loss_and_grad(const std::vector<TrainingSample>& batch);

  // Inference with greedy feed of the previous argmax token; one probability
  // row per autoregressive step (horizon x classes).
  Mat forward(const std::vector<Mat>& frames, const std::vector<int>& history);

  // step closure over a fixed input, for top_i_decode
  StepProbFn step_fn(const std::vector<Mat>& frames, const std::vector<int>& history);

  PredictionSet predict(const std::vector<Mat>& frames, const std::vector<int>& history,
                        int top_i, const Codebook& codebook);

  void save(const std::string& path) const { params_.save(path); }
  void load(const std::string& path) { params_.load(path); }

 private:
  struct GraphCtx;
  nn::Graph::Ref build_loss(GraphCtx& ctx, const std::vector<TrainingSample>& batch);
  nn::Graph::Ref encode(GraphCtx& ctx, const std::vector<Mat>& frames,
                        const std::vector<int>& history);
  nn::Graph::Ref decode_logits(GraphCtx& ctx, nn::Graph::Ref memory,
                               const std::vector<int>& input_ids);
  nn::Graph::Ref encoder_block(GraphCtx& ctx, const std::string& prefix, nn::Graph::Ref x);
  nn::Graph::Ref attention_sum(GraphCtx& ctx, const std::string& prefix, nn::Graph::Ref q_in,
                               nn::Graph::Ref kv_in, const Mat* allow);
  nn::Graph::Ref ffn(GraphCtx& ctx, const std::string& prefix, nn::Graph::Ref x);
  nn::Graph::Ref layer_norm(GraphCtx& ctx, const std::string& prefix, nn::Graph::Ref x);
  Mat encode_values(const std::vector<Mat>& frames, const std::vector<int>& history);
  std::vector<double> step_probs(const Mat& memory, const std::vector<int>& prefix);
  void check_inputs(const std::vector<Mat>& frames, const std::vector<int>& history) const;

  AttentionConfig cfg_;
  nn::ParamStore params_;
};

// flatten a frame's patches, one row per patch (Z x patch_dim)
Mat patchify(const Mat& frame, const AttentionConfig& cfg);

}  // namespace vstream
