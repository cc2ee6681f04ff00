#pragma once

#include <functional>
#include <map>
#include <string>

#include "msem/tape.hpp"

namespace msem {

using ParamStore = std::map<std::string, Tensor>;
using ParamIds = std::map<std::string, int>;

// Enter every parameter as a tape leaf; returns name -> leaf id.
// Pass requires_grad=false for inference-only passes.
ParamIds enter_params(Tape& tape, const ParamStore& params, bool requires_grad = true);

// A differentiable scalar function of a parameter set. The callable builds
// the forward graph on the given tape and returns the loss node id.
using ScalarFn = std::function<int(Tape&, const ParamIds&)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
};

// Central-difference check of reverse-mode gradients for f at params.
// Relative error per element is |a - n| / max(1, |a| + |n|).
GradCheckReport grad_check(const ScalarFn& f, const ParamStore& params, double h = 1e-5);

}  // namespace msem
