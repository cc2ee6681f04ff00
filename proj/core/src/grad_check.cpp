#include "msem/grad_check.hpp"

#include <cmath>

namespace msem {

ParamIds enter_params(Tape& tape, const ParamStore& params, bool requires_grad) {
  ParamIds ids;
  for (const auto& [name, tensor] : params) ids[name] = tape.leaf(tensor, requires_grad);
  return ids;
}

GradCheckReport grad_check(const ScalarFn& f, const ParamStore& params, double h) {
  // Analytic pass.
  ParamStore analytic;
  {
    Tape tape;
    ParamIds ids = enter_params(tape, params);
    const int loss = f(tape, ids);
    tape.backward(loss);
    for (const auto& [name, id] : ids) analytic[name] = tape.grad(id);
  }

  auto eval = [&](const ParamStore& p) {
    Tape tape;
    ParamIds ids = enter_params(tape, p);
    return tape.val(f(tape, ids)).item();
  };

  GradCheckReport report;
  ParamStore perturbed = params;
  for (auto& [name, tensor] : perturbed) {
    for (int64_t i = 0; i < tensor.size(); ++i) {
      const double orig = tensor.at(i);
      tensor.at(i) = orig + h;
      const double fp = eval(perturbed);
      tensor.at(i) = orig - h;
      const double fm = eval(perturbed);
      tensor.at(i) = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[name].at(i);
      const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace msem
