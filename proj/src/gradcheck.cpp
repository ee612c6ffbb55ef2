#include "vstream/gradcheck.hpp"

#include <cmath>

namespace vstream::nn {

std::vector<double> finite_difference_grad(ParamStore& store,
                                           const std::function<double()>& loss_fn,
                                           double h) {
  std::vector<double> flat = store.flat_values();
  std::vector<double> grad(flat.size(), 0.0);
  for (size_t i = 0; i < flat.size(); ++i) {
    const double orig = flat[i];
    flat[i] = orig + h;
    store.set_flat_values(flat);
    const double up = loss_fn();
    flat[i] = orig - h;
    store.set_flat_values(flat);
    const double down = loss_fn();
    flat[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  store.set_flat_values(flat);
  return grad;
}

GradCheckResult compare_grads(const std::vector<double>& analytic,
                              const std::vector<double>& numeric) {
  GradCheckResult res;
  for (size_t i = 0; i < analytic.size(); ++i) {
    const double ga = analytic[i], gn = numeric[i];
    const double denom = std::max({1.0, std::abs(ga), std::abs(gn)});
    const double rel = std::abs(ga - gn) / denom;
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_index = static_cast<int>(i);
    }
  }
  return res;
}

}  // namespace vstream::nn
