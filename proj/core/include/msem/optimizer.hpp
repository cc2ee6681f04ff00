#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "msem/grad_check.hpp"
#include "msem/tensor.hpp"

namespace msem {

struct AdamConfig {
  double lr = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  int64_t step = 0;
};

// One Adam update with bias correction over every named parameter that has
// a gradient. Missing state tensors are created as zeros.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
               const AdamConfig& cfg);

void sgd_step(ParamStore& params, const ParamStore& grads, double lr);

}  // namespace msem
