#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vstream/mat.hpp"

namespace vstream::nn {

// named trainable tensor with gradient and Adam state
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m, adam_v;

  Parameter(std::string n, Mat init)
      : name(std::move(n)),
        value(std::move(init)),
        grad(value.rows, value.cols),
        adam_m(value.rows, value.cols),
        adam_v(value.rows, value.cols) {}
};

class ParamStore {
 public:
  Parameter& add(const std::string& name, Mat init);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  size_t scalar_count() const;

  void zero_grad();
  // Adam with bias correction; shared step counter across the store
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // flat parameter vector helpers (gradient checking, determinism tests)
  std::vector<double> flat_values() const;
  void set_flat_values(const std::vector<double>& flat);
  std::vector<double> flat_grads() const;

  void save(const std::string& path) const;
  void load(const std::string& path);  // names and shapes must match

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  int64_t adam_t_ = 0;
};

// Reverse-mode tape over Mat ops. Nodes are created in topological order by
// construction; backward() walks them in reverse. One Graph per forward pass.
class Graph {
 public:
  using Ref = int;

  Graph() = default;
  Graph(const Graph&) = delete;             // backward closures capture this
  Graph& operator=(const Graph&) = delete;

  Ref constant(Mat m);
  Ref param(Parameter& p);

  const Mat& value(Ref r) const { return nodes_[r].val; }
  const Mat& grad_of(Ref r) const { return nodes_[r].grad; }

  Ref matmul(Ref a, Ref b);
  Ref transpose(Ref a);
  Ref add(Ref a, Ref b);
  Ref sub(Ref a, Ref b);
  Ref add_rowvec(Ref a, Ref row);  // row: 1 x C broadcast over rows of a
  Ref scale(Ref a, double s);
  Ref hadamard(Ref a, Ref b);
  Ref hadamard_const(Ref a, const Mat& c);
  Ref tanh_act(Ref a);
  Ref relu(Ref a);
  Ref gelu(Ref a);
  Ref exp_elem(Ref a);
  Ref log_elem(Ref a);
  Ref softmax_rows(Ref a);
  Ref log_softmax_rows(Ref a);
  // allow(i,j) == 0 masks entry j out of row i's softmax
  Ref masked_softmax_rows(Ref a, const Mat& allow);
  Ref layer_norm_rows(Ref a, Ref gain, Ref bias, double eps = 1e-5);
  Ref mean_rows(Ref a);  // R x C -> 1 x C
  Ref concat_rows(const std::vector<Ref>& parts);
  Ref slice_rows(Ref a, int first_row, int num_rows);
  Ref reshape(Ref a, int rows, int cols);  // row-major relabel, same element count
  Ref embed_rows(Ref table, std::vector<int> ids);
  Ref gather_cols(Ref a, std::vector<int> col_per_row);  // R x C -> R x 1
  Ref min_with_const(Ref a, const Mat& cap);
  // x: in_ch x L, kernels: out_ch x (in_ch * k), bias: 1 x out_ch
  Ref conv1d(Ref x, Ref kernels, Ref bias, int kernel_w);
  Ref sum_all(Ref a);   // 1 x 1
  Ref mean_all(Ref a);  // 1 x 1
  // mean over rows of (logsumexp(row) - logit[target]); 1 x 1
  Ref cross_entropy_logits(Ref logits, const std::vector<int>& targets);

  // affine helper: x W + b
  Ref linear(Ref x, Ref w, Ref b) { return add_rowvec(matmul(x, w), b); }

  void backward(Ref scalar_loss);

 private:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void()> back;  // accumulates into input/param grads
  };
  std::vector<Node> nodes_;

  Ref make(Mat val, std::function<void()> back = nullptr);
  void check(Ref r) const;
};

// Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
Mat xavier_init(int rows, int cols, uint64_t seed);

}  // namespace vstream::nn
