#include "msem/optimizer.hpp"

#include <cmath>

#include "msem/errors.hpp"

namespace msem {

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
               const AdamConfig& cfg) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (!g.same_shape(p)) {
      throw ContractError("adam_step: gradient shape " + g.shape_str() +
                          " does not match parameter '" + name + "' " + p.shape_str());
    }
    Tensor& m = state.m.try_emplace(name, Tensor(p.shape())).first->second;
    Tensor& v = state.v.try_emplace(name, Tensor(p.shape())).first->second;
    for (int64_t i = 0; i < p.size(); ++i) {
      m.at(i) = cfg.beta1 * m.at(i) + (1.0 - cfg.beta1) * g.at(i);
      v.at(i) = cfg.beta2 * v.at(i) + (1.0 - cfg.beta2) * g.at(i) * g.at(i);
      const double mhat = m.at(i) / bc1;
      const double vhat = v.at(i) / bc2;
      p.at(i) -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void sgd_step(ParamStore& params, const ParamStore& grads, double lr) {
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (!g.same_shape(p)) {
      throw ContractError("sgd_step: gradient shape " + g.shape_str() +
                          " does not match parameter '" + name + "' " + p.shape_str());
    }
    for (int64_t i = 0; i < p.size(); ++i) p.at(i) -= lr * g.at(i);
  }
}

}  // namespace msem
