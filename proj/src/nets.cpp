#include "vstream/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace vstream {

void NetConfig::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("net config: input_dim must be positive");
  if (output_dim <= 0) throw std::invalid_argument("net config: output_dim must be positive");
  for (int h : hidden)
    if (h <= 0) throw std::invalid_argument("net config: hidden sizes must be positive");
  if (conv_front) {
    if (conv_channels <= 0 || conv_kernel <= 0 || conv_kernel > input_dim)
      throw std::invalid_argument("net config: bad conv front-end shape");
  }
}

FeedForwardNet::FeedForwardNet(NetConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  uint64_t salt = cfg_.seed * 6151 + 13;
  auto next = [&salt]() { return ++salt; };

  dense_input_dim_ = cfg_.input_dim;
  if (cfg_.conv_front) {
    params_.add("conv.w", nn::xavier_init(cfg_.conv_channels, cfg_.conv_kernel, next()));
    params_.add("conv.b", Mat(1, cfg_.conv_channels));
    dense_input_dim_ = cfg_.conv_channels * (cfg_.input_dim - cfg_.conv_kernel + 1);
  }
  int prev = dense_input_dim_;
  for (size_t i = 0; i < cfg_.hidden.size(); ++i) {
    const std::string prefix = "l" + std::to_string(i);
    params_.add(prefix + ".w", nn::xavier_init(prev, cfg_.hidden[i], next()));
    params_.add(prefix + ".b", Mat(1, cfg_.hidden[i]));
    prev = cfg_.hidden[i];
  }
  // zero head: fresh actors emit uniform simplexes, fresh critics value 0
  params_.add("head.w", Mat(prev, cfg_.output_dim));
  params_.add("head.b", Mat(1, cfg_.output_dim));
}

nn::Graph::Ref FeedForwardNet::forward_logits_graph(nn::Graph& g, const Mat& inputs) {
  if (inputs.cols != cfg_.input_dim)
    throw std::invalid_argument("net: input width mismatch");
  nn::Graph::Ref x;
  if (cfg_.conv_front) {
    const auto in = g.constant(inputs);
    const auto kw = g.param(*params_.find("conv.w"));
    const auto kb = g.param(*params_.find("conv.b"));
    std::vector<nn::Graph::Ref> rows;
    for (int i = 0; i < inputs.rows; ++i) {
      const auto sample = g.slice_rows(in, i, 1);  // 1 x L, single channel
      const auto conv = g.tanh_act(g.conv1d(sample, kw, kb, cfg_.conv_kernel));
      rows.push_back(g.reshape(conv, 1, dense_input_dim_));
    }
    x = rows.size() == 1 ? rows[0] : g.concat_rows(rows);
  } else {
    x = g.constant(inputs);
  }
  for (size_t i = 0; i < cfg_.hidden.size(); ++i) {
    const std::string prefix = "l" + std::to_string(i);
    x = g.tanh_act(g.linear(x, g.param(*params_.find(prefix + ".w")),
                            g.param(*params_.find(prefix + ".b"))));
  }
  return g.linear(x, g.param(*params_.find("head.w")), g.param(*params_.find("head.b")));
}

std::vector<double> FeedForwardNet::forward(const std::vector<double>& input) const {
  if (static_cast<int>(input.size()) != cfg_.input_dim)
    throw std::invalid_argument("net: input width mismatch");
  std::vector<double> x;
  if (cfg_.conv_front) {
    // mirrors Graph::conv1d accumulation order exactly
    const Mat& kw = params_.find("conv.w")->value;
    const Mat& kb = params_.find("conv.b")->value;
    const int out_len = cfg_.input_dim - cfg_.conv_kernel + 1;
    x.resize(static_cast<size_t>(cfg_.conv_channels) * out_len);
    for (int o = 0; o < cfg_.conv_channels; ++o)
      for (int t = 0; t < out_len; ++t) {
        double s = kb(0, o);
        for (int d = 0; d < cfg_.conv_kernel; ++d) s += kw(o, d) * input[t + d];
        x[static_cast<size_t>(o) * out_len + t] = std::tanh(s);
      }
  } else {
    x = input;
  }
  auto dense = [this](const std::vector<double>& in, const std::string& prefix,
                      bool activation) {
    const Mat& w = params_.find(prefix + ".w")->value;
    const Mat& b = params_.find(prefix + ".b")->value;
    std::vector<double> out(w.cols);
    for (int j = 0; j < w.cols; ++j) {
      double s = 0.0;
      for (int k = 0; k < w.rows; ++k) s += in[k] * w(k, j);
      s += b(0, j);
      out[j] = activation ? std::tanh(s) : s;
    }
    return out;
  };
  for (size_t i = 0; i < cfg_.hidden.size(); ++i) x = dense(x, "l" + std::to_string(i), true);
  x = dense(x, "head", false);
  if (cfg_.softmax_head) return softmax(x);
  return x;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double m = -1e300;
  for (double v : logits) m = std::max(m, v);
  double sum = 0.0;
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace vstream
