#include "vstream/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vstream/checkpoint.hpp"
#include "vstream/rng.hpp"

namespace vstream::nn {

Parameter& ParamStore::add(const std::string& name, Mat init) {
  if (find(name)) throw std::invalid_argument("param store: duplicate name " + name);
  params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  return *params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += p->value.v.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  ++adam_t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t_));
  for (auto& p : params_) {
    for (size_t i = 0; i < p->value.v.size(); ++i) {
      const double g = p->grad.v[i];
      p->adam_m.v[i] = beta1 * p->adam_m.v[i] + (1.0 - beta1) * g;
      p->adam_v.v[i] = beta2 * p->adam_v.v[i] + (1.0 - beta2) * g * g;
      const double mhat = p->adam_m.v[i] / bc1;
      const double vhat = p->adam_v.v[i] / bc2;
      p->value.v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

std::vector<double> ParamStore::flat_values() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const auto& p : params_) out.insert(out.end(), p->value.v.begin(), p->value.v.end());
  return out;
}

void ParamStore::set_flat_values(const std::vector<double>& flat) {
  if (flat.size() != scalar_count())
    throw std::invalid_argument("param store: flat size mismatch");
  size_t k = 0;
  for (auto& p : params_)
    for (size_t i = 0; i < p->value.v.size(); ++i) p->value.v[i] = flat[k++];
}

std::vector<double> ParamStore::flat_grads() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const auto& p : params_) out.insert(out.end(), p->grad.v.begin(), p->grad.v.end());
  return out;
}

void ParamStore::save(const std::string& path) const {
  std::vector<std::pair<std::string, const Mat*>> tensors;
  for (const auto& p : params_) tensors.emplace_back(p->name, &p->value);
  save_tensors(path, tensors);
}

void ParamStore::load(const std::string& path) {
  auto tensors = load_tensors(path);
  for (auto& p : params_) {
    auto it = tensors.find(p->name);
    if (it == tensors.end())
      throw std::runtime_error("checkpoint: missing tensor " + p->name);
    if (!it->second.same_shape(p->value))
      throw std::runtime_error("checkpoint: shape mismatch for " + p->name);
    p->value = it->second;
  }
}

// ---------------------------------------------------------------------------

Graph::Ref Graph::make(Mat val, std::function<void()> back) {
  Node n;
  n.grad = Mat(val.rows, val.cols);
  n.val = std::move(val);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Ref>(nodes_.size()) - 1;
}

void Graph::check(Ref r) const {
  if (r < 0 || r >= static_cast<Ref>(nodes_.size()))
    throw std::invalid_argument("graph: bad node ref");
}

Graph::Ref Graph::constant(Mat m) { return make(std::move(m)); }

Graph::Ref Graph::param(Parameter& p) {
  const Ref r = make(p.value);
  Parameter* pp = &p;
  nodes_[r].back = [this, r, pp]() {
    const Mat& g = nodes_[r].grad;
    for (size_t i = 0; i < g.v.size(); ++i) pp->grad.v[i] += g.v[i];
  };
  return r;
}

Graph::Ref Graph::matmul(Ref a, Ref b) {
  check(a);
  check(b);
  Mat out = vstream::matmul(nodes_[a].val, nodes_[b].val);
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a, b]() {
    const Mat& g = nodes_[r].grad;
    const Mat bt = vstream::transpose(nodes_[b].val);
    const Mat at = vstream::transpose(nodes_[a].val);
    const Mat da = vstream::matmul(g, bt);
    const Mat db = vstream::matmul(at, g);
    for (size_t i = 0; i < da.v.size(); ++i) nodes_[a].grad.v[i] += da.v[i];
    for (size_t i = 0; i < db.v.size(); ++i) nodes_[b].grad.v[i] += db.v[i];
  };
  return r;
}

Graph::Ref Graph::transpose(Ref a) {
  check(a);
  const Ref r = make(vstream::transpose(nodes_[a].val));
  nodes_[r].back = [this, r, a]() {
    const Mat gt = vstream::transpose(nodes_[r].grad);
    for (size_t i = 0; i < gt.v.size(); ++i) nodes_[a].grad.v[i] += gt.v[i];
  };
  return r;
}

Graph::Ref Graph::add(Ref a, Ref b) {
  check(a);
  check(b);
  if (!nodes_[a].val.same_shape(nodes_[b].val)) throw std::invalid_argument("add: shape mismatch");
  Mat out = nodes_[a].val;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += nodes_[b].val.v[i];
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a, b]() {
    const Mat& g = nodes_[r].grad;
    for (size_t i = 0; i < g.v.size(); ++i) {
      nodes_[a].grad.v[i] += g.v[i];
      nodes_[b].grad.v[i] += g.v[i];
    }
  };
  return r;
}

Graph::Ref Graph::sub(Ref a, Ref b) {
  check(a);
  check(b);
  if (!nodes_[a].val.same_shape(nodes_[b].val)) throw std::invalid_argument("sub: shape mismatch");
  Mat out = nodes_[a].val;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= nodes_[b].val.v[i];
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a, b]() {
    const Mat& g = nodes_[r].grad;
    for (size_t i = 0; i < g.v.size(); ++i) {
      nodes_[a].grad.v[i] += g.v[i];
      nodes_[b].grad.v[i] -= g.v[i];
    }
  };
  return r;
}

Graph::Ref Graph::add_rowvec(Ref a, Ref row) {
  check(a);
  check(row);
  const Mat& av = nodes_[a].val;
  const Mat& rv = nodes_[row].val;
  if (rv.rows != 1 || rv.cols != av.cols) throw std::invalid_argument("add_rowvec: shape mismatch");
  Mat out = av;
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) out(i, j) += rv(0, j);
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a, row]() {
    const Mat& g = nodes_[r].grad;
    for (size_t i = 0; i < g.v.size(); ++i) nodes_[a].grad.v[i] += g.v[i];
    Mat& rg = nodes_[row].grad;
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) rg(0, j) += g(i, j);
  };
  return r;
}

Graph::Ref Graph::scale(Ref a, double s) {
  check(a);
  Mat out = nodes_[a].val;
  for (double& x : out.v) x *= s;
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a, s]() {
    const Mat& g = nodes_[r].grad;
    for (size_t i = 0; i < g.v.size(); ++i) nodes_[a].grad.v[i] += s * g.v[i];
  };
  return r;
}

Graph::Ref Graph::hadamard(Ref a, Ref b) {
  check(a);
  check(b);
  if (!nodes_[a].val.same_shape(nodes_[b].val))
    throw std::invalid_argument("hadamard: shape mismatch");
  Mat out = nodes_[a].val;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= nodes_[b].val.v[i];
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a, b]() {
    const Mat& g = nodes_[r].grad;
    for (size_t i = 0; i < g.v.size(); ++i) {
      nodes_[a].grad.v[i] += g.v[i] * nodes_[b].val.v[i];
      nodes_[b].grad.v[i] += g.v[i] * nodes_[a].val.v[i];
    }
  };
  return r;
}

Graph::Ref Graph::hadamard_const(Ref a, const Mat& c) {
  check(a);
  if (!nodes_[a].val.same_shape(c)) throw std::invalid_argument("hadamard_const: shape mismatch");
  Mat out = nodes_[a].val;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= c.v[i];
  const Ref r = make(std::move(out));
  Mat cc = c;
  nodes_[r].back = [this, r, a, cc]() {
    const Mat& g = nodes_[r].grad;
    for (size_t i = 0; i < g.v.size(); ++i) nodes_[a].grad.v[i] += g.v[i] * cc.v[i];
  };
  return r;
}

Graph::Ref Graph::tanh_act(Ref a) {
  check(a);
  Mat out = nodes_[a].val;
  for (double& x : out.v) x = std::tanh(x);
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const Mat& g = nodes_[r].grad;
    const Mat& y = nodes_[r].val;
    for (size_t i = 0; i < g.v.size(); ++i)
      nodes_[a].grad.v[i] += g.v[i] * (1.0 - y.v[i] * y.v[i]);
  };
  return r;
}

Graph::Ref Graph::relu(Ref a) {
  check(a);
  Mat out = nodes_[a].val;
  for (double& x : out.v) x = std::max(0.0, x);
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const Mat& g = nodes_[r].grad;
    const Mat& in = nodes_[a].val;
    for (size_t i = 0; i < g.v.size(); ++i)
      if (in.v[i] > 0.0) nodes_[a].grad.v[i] += g.v[i];
  };
  return r;
}

Graph::Ref Graph::gelu(Ref a) {
  check(a);
  Mat out = nodes_[a].val;
  const double inv_sqrt2 = 0.7071067811865476;
  for (double& x : out.v) x = 0.5 * x * (1.0 + std::erf(x * inv_sqrt2));
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const Mat& g = nodes_[r].grad;
    const Mat& in = nodes_[a].val;
    const double inv_sqrt2 = 0.7071067811865476;
    const double inv_sqrt_2pi = 0.3989422804014327;
    for (size_t i = 0; i < g.v.size(); ++i) {
      const double x = in.v[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      nodes_[a].grad.v[i] += g.v[i] * (cdf + x * pdf);
    }
  };
  return r;
}

Graph::Ref Graph::exp_elem(Ref a) {
  check(a);
  Mat out = nodes_[a].val;
  for (double& x : out.v) x = std::exp(x);
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const Mat& g = nodes_[r].grad;
    const Mat& y = nodes_[r].val;
    for (size_t i = 0; i < g.v.size(); ++i) nodes_[a].grad.v[i] += g.v[i] * y.v[i];
  };
  return r;
}

Graph::Ref Graph::log_elem(Ref a) {
  check(a);
  Mat out = nodes_[a].val;
  for (double& x : out.v) x = std::log(x);
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const Mat& g = nodes_[r].grad;
    const Mat& in = nodes_[a].val;
    for (size_t i = 0; i < g.v.size(); ++i) nodes_[a].grad.v[i] += g.v[i] / in.v[i];
  };
  return r;
}

Graph::Ref Graph::softmax_rows(Ref a) {
  check(a);
  const Mat& in = nodes_[a].val;
  Mat out(in.rows, in.cols);
  for (int i = 0; i < in.rows; ++i) {
    double m = -1e300;
    for (int j = 0; j < in.cols; ++j) m = std::max(m, in(i, j));
    double s = 0.0;
    for (int j = 0; j < in.cols; ++j) s += std::exp(in(i, j) - m);
    for (int j = 0; j < in.cols; ++j) out(i, j) = std::exp(in(i, j) - m) / s;
  }
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const Mat& g = nodes_[r].grad;
    const Mat& y = nodes_[r].val;
    for (int i = 0; i < g.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < g.cols; ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < g.cols; ++j)
        nodes_[a].grad(i, j) += y(i, j) * (g(i, j) - dot);
    }
  };
  return r;
}

Graph::Ref Graph::log_softmax_rows(Ref a) {
  check(a);
  const Mat& in = nodes_[a].val;
  Mat out(in.rows, in.cols);
  for (int i = 0; i < in.rows; ++i) {
    double m = -1e300;
    for (int j = 0; j < in.cols; ++j) m = std::max(m, in(i, j));
    double s = 0.0;
    for (int j = 0; j < in.cols; ++j) s += std::exp(in(i, j) - m);
    const double lse = m + std::log(s);
    for (int j = 0; j < in.cols; ++j) out(i, j) = in(i, j) - lse;
  }
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const Mat& g = nodes_[r].grad;
    const Mat& lsm = nodes_[r].val;
    for (int i = 0; i < g.rows; ++i) {
      double gsum = 0.0;
      for (int j = 0; j < g.cols; ++j) gsum += g(i, j);
      for (int j = 0; j < g.cols; ++j)
        nodes_[a].grad(i, j) += g(i, j) - std::exp(lsm(i, j)) * gsum;
    }
  };
  return r;
}

Graph::Ref Graph::masked_softmax_rows(Ref a, const Mat& allow) {
  check(a);
  const Mat& in = nodes_[a].val;
  if (!in.same_shape(allow)) throw std::invalid_argument("masked_softmax: shape mismatch");
  Mat out(in.rows, in.cols);
  for (int i = 0; i < in.rows; ++i) {
    double m = -1e300;
    bool any = false;
    for (int j = 0; j < in.cols; ++j)
      if (allow(i, j) != 0.0) { m = std::max(m, in(i, j)); any = true; }
    if (!any) throw std::invalid_argument("masked_softmax: fully masked row");
    double s = 0.0;
    for (int j = 0; j < in.cols; ++j)
      if (allow(i, j) != 0.0) s += std::exp(in(i, j) - m);
    for (int j = 0; j < in.cols; ++j)
      out(i, j) = allow(i, j) != 0.0 ? std::exp(in(i, j) - m) / s : 0.0;
  }
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const Mat& g = nodes_[r].grad;
    const Mat& y = nodes_[r].val;  // zero on masked entries
    for (int i = 0; i < g.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < g.cols; ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < g.cols; ++j)
        nodes_[a].grad(i, j) += y(i, j) * (g(i, j) - dot);
    }
  };
  return r;
}

Graph::Ref Graph::layer_norm_rows(Ref a, Ref gain, Ref bias, double eps) {
  check(a);
  check(gain);
  check(bias);
  const Mat& in = nodes_[a].val;
  const Mat& g0 = nodes_[gain].val;
  const Mat& b0 = nodes_[bias].val;
  if (g0.rows != 1 || g0.cols != in.cols || b0.rows != 1 || b0.cols != in.cols)
    throw std::invalid_argument("layer_norm: gain/bias must be 1 x cols");
  Mat out(in.rows, in.cols);
  Mat xhat(in.rows, in.cols);
  std::vector<double> inv_std(in.rows);
  for (int i = 0; i < in.rows; ++i) {
    double mu = 0.0;
    for (int j = 0; j < in.cols; ++j) mu += in(i, j);
    mu /= in.cols;
    double var = 0.0;
    for (int j = 0; j < in.cols; ++j) {
      const double d = in(i, j) - mu;
      var += d * d;
    }
    var /= in.cols;
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < in.cols; ++j) {
      xhat(i, j) = (in(i, j) - mu) * inv_std[i];
      out(i, j) = xhat(i, j) * g0(0, j) + b0(0, j);
    }
  }
  const Ref r = make(std::move(out));
  Mat xhat_c = std::move(xhat);
  std::vector<double> inv_std_c = std::move(inv_std);
  nodes_[r].back = [this, r, a, gain, bias, xhat_c, inv_std_c]() {
    const Mat& g = nodes_[r].grad;
    const Mat& gv = nodes_[gain].val;
    const int C = g.cols;
    for (int i = 0; i < g.rows; ++i) {
      double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
      for (int j = 0; j < C; ++j) {
        const double dxh = g(i, j) * gv(0, j);
        mean_dxhat += dxh;
        mean_dxhat_xhat += dxh * xhat_c(i, j);
      }
      mean_dxhat /= C;
      mean_dxhat_xhat /= C;
      for (int j = 0; j < C; ++j) {
        const double dxh = g(i, j) * gv(0, j);
        nodes_[a].grad(i, j) +=
            (dxh - mean_dxhat - xhat_c(i, j) * mean_dxhat_xhat) * inv_std_c[i];
        nodes_[gain].grad(0, j) += g(i, j) * xhat_c(i, j);
        nodes_[bias].grad(0, j) += g(i, j);
      }
    }
  };
  return r;
}

Graph::Ref Graph::mean_rows(Ref a) {
  check(a);
  const Mat& in = nodes_[a].val;
  Mat out(1, in.cols);
  for (int i = 0; i < in.rows; ++i)
    for (int j = 0; j < in.cols; ++j) out(0, j) += in(i, j);
  for (int j = 0; j < in.cols; ++j) out(0, j) /= in.rows;
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const Mat& g = nodes_[r].grad;
    const int rows = nodes_[a].val.rows;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < g.cols; ++j) nodes_[a].grad(i, j) += g(0, j) / rows;
  };
  return r;
}

Graph::Ref Graph::concat_rows(const std::vector<Ref>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  int total = 0;
  const int cols = nodes_[parts[0]].val.cols;
  for (Ref p : parts) {
    check(p);
    if (nodes_[p].val.cols != cols) throw std::invalid_argument("concat_rows: column mismatch");
    total += nodes_[p].val.rows;
  }
  Mat out(total, cols);
  int row = 0;
  for (Ref p : parts) {
    const Mat& m = nodes_[p].val;
    std::copy(m.v.begin(), m.v.end(), out.v.begin() + static_cast<size_t>(row) * cols);
    row += m.rows;
  }
  const Ref r = make(std::move(out));
  std::vector<Ref> parts_c = parts;
  nodes_[r].back = [this, r, parts_c]() {
    const Mat& g = nodes_[r].grad;
    int row = 0;
    for (Ref p : parts_c) {
      Mat& pg = nodes_[p].grad;
      for (int i = 0; i < pg.rows; ++i)
        for (int j = 0; j < pg.cols; ++j) pg(i, j) += g(row + i, j);
      row += pg.rows;
    }
  };
  return r;
}

Graph::Ref Graph::slice_rows(Ref a, int first_row, int num_rows) {
  check(a);
  const Mat& in = nodes_[a].val;
  if (first_row < 0 || num_rows <= 0 || first_row + num_rows > in.rows)
    throw std::invalid_argument("slice_rows: range out of bounds");
  Mat out(num_rows, in.cols);
  for (int i = 0; i < num_rows; ++i)
    for (int j = 0; j < in.cols; ++j) out(i, j) = in(first_row + i, j);
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a, first_row]() {
    const Mat& g = nodes_[r].grad;
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) nodes_[a].grad(first_row + i, j) += g(i, j);
  };
  return r;
}

Graph::Ref Graph::reshape(Ref a, int rows, int cols) {
  check(a);
  const Mat& in = nodes_[a].val;
  if (rows * cols != in.size()) throw std::invalid_argument("reshape: element count mismatch");
  Mat out(rows, cols);
  out.v = in.v;
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const Mat& g = nodes_[r].grad;
    for (size_t i = 0; i < g.v.size(); ++i) nodes_[a].grad.v[i] += g.v[i];
  };
  return r;
}

Graph::Ref Graph::embed_rows(Ref table, std::vector<int> ids) {
  check(table);
  const Mat& tab = nodes_[table].val;
  Mat out(static_cast<int>(ids.size()), tab.cols);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tab.rows) throw std::out_of_range("embed_rows: id out of range");
    for (int j = 0; j < tab.cols; ++j) out(static_cast<int>(i), j) = tab(ids[i], j);
  }
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, table, ids]() {
    const Mat& g = nodes_[r].grad;
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < g.cols; ++j)
        nodes_[table].grad(ids[i], j) += g(static_cast<int>(i), j);
  };
  return r;
}

Graph::Ref Graph::gather_cols(Ref a, std::vector<int> col_per_row) {
  check(a);
  const Mat& in = nodes_[a].val;
  if (static_cast<int>(col_per_row.size()) != in.rows)
    throw std::invalid_argument("gather_cols: need one column per row");
  Mat out(in.rows, 1);
  for (int i = 0; i < in.rows; ++i) {
    if (col_per_row[i] < 0 || col_per_row[i] >= in.cols)
      throw std::out_of_range("gather_cols: column out of range");
    out(i, 0) = in(i, col_per_row[i]);
  }
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a, col_per_row]() {
    const Mat& g = nodes_[r].grad;
    for (int i = 0; i < g.rows; ++i) nodes_[a].grad(i, col_per_row[i]) += g(i, 0);
  };
  return r;
}

Graph::Ref Graph::min_with_const(Ref a, const Mat& cap) {
  check(a);
  const Mat& in = nodes_[a].val;
  if (!in.same_shape(cap)) throw std::invalid_argument("min_with_const: shape mismatch");
  Mat out = in;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = std::min(out.v[i], cap.v[i]);
  const Ref r = make(std::move(out));
  Mat cap_c = cap;
  nodes_[r].back = [this, r, a, cap_c]() {
    const Mat& g = nodes_[r].grad;
    const Mat& in = nodes_[a].val;
    for (size_t i = 0; i < g.v.size(); ++i)
      if (in.v[i] <= cap_c.v[i]) nodes_[a].grad.v[i] += g.v[i];
  };
  return r;
}

Graph::Ref Graph::conv1d(Ref x, Ref kernels, Ref bias, int kernel_w) {
  check(x);
  check(kernels);
  check(bias);
  const Mat& in = nodes_[x].val;        // in_ch x L
  const Mat& ker = nodes_[kernels].val; // out_ch x (in_ch * k)
  const Mat& b = nodes_[bias].val;      // 1 x out_ch
  const int in_ch = in.rows, len = in.cols, out_ch = ker.rows;
  if (kernel_w <= 0 || kernel_w > len) throw std::invalid_argument("conv1d: bad kernel width");
  if (ker.cols != in_ch * kernel_w) throw std::invalid_argument("conv1d: kernel shape mismatch");
  if (b.rows != 1 || b.cols != out_ch) throw std::invalid_argument("conv1d: bias shape mismatch");
  const int out_len = len - kernel_w + 1;
  Mat out(out_ch, out_len);
  for (int o = 0; o < out_ch; ++o)
    for (int t = 0; t < out_len; ++t) {
      double s = b(0, o);
      for (int c = 0; c < in_ch; ++c)
        for (int d = 0; d < kernel_w; ++d) s += ker(o, c * kernel_w + d) * in(c, t + d);
      out(o, t) = s;
    }
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, x, kernels, bias, kernel_w]() {
    const Mat& g = nodes_[r].grad;
    const Mat& in = nodes_[x].val;
    const Mat& ker = nodes_[kernels].val;
    const int in_ch = in.rows, out_ch = ker.rows, out_len = g.cols;
    for (int o = 0; o < out_ch; ++o)
      for (int t = 0; t < out_len; ++t) {
        const double gv = g(o, t);
        if (gv == 0.0) continue;
        nodes_[bias].grad(0, o) += gv;
        for (int c = 0; c < in_ch; ++c)
          for (int d = 0; d < kernel_w; ++d) {
            nodes_[kernels].grad(o, c * kernel_w + d) += gv * in(c, t + d);
            nodes_[x].grad(c, t + d) += gv * ker(o, c * kernel_w + d);
          }
      }
  };
  return r;
}

Graph::Ref Graph::sum_all(Ref a) {
  check(a);
  Mat out(1, 1);
  for (double x : nodes_[a].val.v) out(0, 0) += x;
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a]() {
    const double g = nodes_[r].grad(0, 0);
    for (double& x : nodes_[a].grad.v) x += g;
  };
  return r;
}

Graph::Ref Graph::mean_all(Ref a) {
  check(a);
  const int n = nodes_[a].val.size();
  Mat out(1, 1);
  for (double x : nodes_[a].val.v) out(0, 0) += x;
  out(0, 0) /= n;
  const Ref r = make(std::move(out));
  nodes_[r].back = [this, r, a, n]() {
    const double g = nodes_[r].grad(0, 0) / n;
    for (double& x : nodes_[a].grad.v) x += g;
  };
  return r;
}

Graph::Ref Graph::cross_entropy_logits(Ref logits, const std::vector<int>& targets) {
  check(logits);
  const Mat& in = nodes_[logits].val;
  if (static_cast<int>(targets.size()) != in.rows)
    throw std::invalid_argument("cross_entropy: one target per row required");
  Mat soft(in.rows, in.cols);
  double loss = 0.0;
  for (int i = 0; i < in.rows; ++i) {
    if (targets[i] < 0 || targets[i] >= in.cols)
      throw std::out_of_range("cross_entropy: target out of range");
    double m = -1e300;
    for (int j = 0; j < in.cols; ++j) m = std::max(m, in(i, j));
    double s = 0.0;
    for (int j = 0; j < in.cols; ++j) s += std::exp(in(i, j) - m);
    const double lse = m + std::log(s);
    loss += lse - in(i, targets[i]);
    for (int j = 0; j < in.cols; ++j) soft(i, j) = std::exp(in(i, j) - lse);
  }
  loss /= in.rows;
  Mat out(1, 1);
  out(0, 0) = loss;
  const Ref r = make(std::move(out));
  Mat soft_c = std::move(soft);
  std::vector<int> tgt = targets;
  nodes_[r].back = [this, r, logits, soft_c, tgt]() {
    const double g = nodes_[r].grad(0, 0) / soft_c.rows;
    for (int i = 0; i < soft_c.rows; ++i)
      for (int j = 0; j < soft_c.cols; ++j) {
        double d = soft_c(i, j);
        if (j == tgt[i]) d -= 1.0;
        nodes_[logits].grad(i, j) += g * d;
      }
  };
  return r;
}

void Graph::backward(Ref scalar_loss) {
  check(scalar_loss);
  if (nodes_[scalar_loss].val.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar");
  nodes_[scalar_loss].grad(0, 0) = 1.0;
  for (Ref r = static_cast<Ref>(nodes_.size()) - 1; r >= 0; --r)
    if (nodes_[r].back) nodes_[r].back();
}

Mat xavier_init(int rows, int cols, uint64_t seed) {
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (double& x : m.v) x = rng.uniform(-limit, limit);
  return m;
}

}  // namespace vstream::nn
