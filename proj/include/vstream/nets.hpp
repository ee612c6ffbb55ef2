#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vstream/autograd.hpp"

namespace vstream {

// Actor / critic function approximator: optional 1-D convolutional front-end
// over the observation vector, tanh hidden layers, linear or softmax head.
struct NetConfig {
  int input_dim = 0;
  std::vector<int> hidden{64, 64};
  int output_dim = 1;
  bool softmax_head = false;  // actor: probabilities over rungs
  bool conv_front = false;
  int conv_channels = 8;
  int conv_kernel = 4;
  uint64_t seed = 1;

  void validate() const;
};

class FeedForwardNet {
 public:
  explicit FeedForwardNet(NetConfig cfg);

  const NetConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Inference path without the tape; softmax applied when softmax_head.
  // Matches the graph path bitwise (same accumulation order).
  std::vector<double> forward(const std::vector<double>& input) const;

  // Training path: pre-head outputs (logits / raw value) for a batch,
  // one input row per sample.
  nn::Graph::Ref forward_logits_graph(nn::Graph& g, const Mat& inputs);

 private:
  NetConfig cfg_;
  nn::ParamStore params_;
  int dense_input_dim_ = 0;
};

std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace vstream
