#pragma once

#include <functional>

#include "vstream/autograd.hpp"

namespace vstream::nn {

// Central-difference gradient of loss_fn with respect to every scalar in the
// store. loss_fn must re-run the forward pass from the store's current values
// and must not mutate it. Used to cross-check Graph::backward.
std::vector<double> finite_difference_grad(ParamStore& store,
                                           const std::function<double()>& loss_fn,
                                           double h = 1e-5);

struct GradCheckResult {
  double max_rel_error = 0.0;
  int worst_index = -1;
};

// rel error per scalar: |ga - gn| / max(1, |ga|, |gn|)
GradCheckResult compare_grads(const std::vector<double>& analytic,
                              const std::vector<double>& numeric);

}  // namespace vstream::nn
