#include "msem/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "msem/errors.hpp"

namespace msem {

namespace {

// Forward one pair through the shared encoder and both heads; returns the
// combined-loss node id.
int pair_loss(Tape& tape, const ParamIds& ids, const Model& model, const PairExample& ex,
              const IntentLabeling& labeling, double lambda, bool train_mode, Rng* dropout_rng) {
  const SentenceIds s1 = model.index(ex.q1);
  const SentenceIds s2 = model.index(ex.q2);
  int u = encode(tape, ids, s1, model.config, train_mode, dropout_rng);
  int v = encode(tape, ids, s2, model.config, train_mode, dropout_rng);
  int y_hat = cosine_match_score(tape, u, v, ids);
  int l_match = matching_loss(tape, y_hat, ex.label);
  const int64_t c1 = ex.intent1 ? *ex.intent1 : labeling.class_of(ex.raw1);
  const int64_t c2 = ex.intent2 ? *ex.intent2 : labeling.class_of(ex.raw2);
  int l_u = intent_loss(tape, u, c1, ids);
  int l_v = intent_loss(tape, v, c2, ids);
  return combined_loss(tape, l_match, l_u, l_v, LossWeights{lambda});
}

}  // namespace

double train_step(Model& model, std::span<const PairExample> batch, const IntentLabeling& labeling,
                  const TrainConfig& cfg, AdamState* state, Rng& dropout_rng) {
  if (batch.empty()) throw ContractError("train_step: empty batch");
  ParamStore grad_sum;
  for (const auto& [name, tensor] : model.params) grad_sum[name] = Tensor(tensor.shape());
  double loss_sum = 0.0;
  for (const PairExample& ex : batch) {
    Tape tape;
    ParamIds ids = enter_params(tape, model.params, /*requires_grad=*/true);
    const int loss = pair_loss(tape, ids, model, ex, labeling, cfg.lambda, true, &dropout_rng);
    loss_sum += tape.val(loss).item();
    tape.backward(loss);
    for (const auto& [name, id] : ids) {
      const Tensor& g = tape.grad(id);
      Tensor& acc = grad_sum[name];
      for (int64_t i = 0; i < g.size(); ++i) acc.at(i) += g.at(i);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (auto& [name, g] : grad_sum)
    for (int64_t i = 0; i < g.size(); ++i) g.at(i) *= inv_n;
  if (state != nullptr) {
    AdamConfig acfg{cfg.adam_lr, cfg.beta1, cfg.beta2, cfg.adam_eps};
    adam_step(model.params, grad_sum, *state, acfg);
  } else {
    sgd_step(model.params, grad_sum, cfg.sgd_lr);
  }
  return loss_sum * inv_n;
}

double pair_cosine(const Model& model, const std::vector<std::string>& q1,
                   const std::vector<std::string>& q2) {
  const Tensor u = model.encode_sentence(q1);
  const Tensor v = model.encode_sentence(q2);
  double dot = 0, nu = 0, nv = 0;
  for (int64_t i = 0; i < u.size(); ++i) {
    dot += u.at(i) * v.at(i);
    nu += u.at(i) * u.at(i);
    nv += v.at(i) * v.at(i);
  }
  if (nu == 0.0 || nv == 0.0) throw DataError("pair_cosine: zero-norm sentence vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

Metrics evaluate(const Model& model, const std::vector<PairExample>& pairs, double threshold) {
  if (pairs.empty()) throw DataError("evaluate: empty evaluation set");
  Metrics m;
  const double gamma = model.match_gamma();
  const double alpha = model.match_alpha();
  for (const auto& ex : pairs) {
    const double y_hat = cosine_match_score_value(pair_cosine(model, ex.q1, ex.q2), gamma, alpha);
    m.count(ex.label, y_hat >= threshold ? 1 : 0);
  }
  return m;
}

TrainResult train(const std::vector<PairExample>& train_pairs,
                  const std::vector<PairExample>& val_pairs, const IntentLabeling& labeling,
                  Model model, const TrainConfig& cfg) {
  if (train_pairs.empty()) throw DataError("train: empty training set");
  Rng rng(cfg.seed);
  AdamState adam;
  bool adam_phase = true;
  int non_improving = 0;
  TrainResult result;
  result.best = model;
  result.best_metric = -1.0;
  int64_t step = 0;

  std::vector<size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), 0);

  const int64_t steps_per_epoch =
      (static_cast<int64_t>(train_pairs.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const int64_t eval_every = cfg.eval_every > 0 ? cfg.eval_every : steps_per_epoch;

  auto run_eval = [&]() -> bool {  // returns true to stop training
    const Metrics m = val_pairs.empty() ? evaluate(model, train_pairs, cfg.threshold)
                                        : evaluate(model, val_pairs, cfg.threshold);
    const double metric = m.accuracy();
    const bool improved = metric > result.best_metric;
    result.history.entries.push_back({step, metric, improved, adam_phase ? "adam" : "sgd"});
    if (cfg.verbose) {
      std::cerr << "step " << step << " [" << (adam_phase ? "adam" : "sgd")
                << "] val acc " << metric << (improved ? " *" : "") << "\n";
    }
    if (improved) {
      result.best_metric = metric;
      result.best = model;
      non_improving = 0;
      return false;
    }
    if (++non_improving >= cfg.patience) {
      if (adam_phase) {
        adam_phase = false;
        non_improving = 0;
        result.history.switch_step = step;
        if (cfg.verbose) std::cerr << "switching to SGD at step " << step << "\n";
        return false;
      }
      return true;  // SGD phase stalled too
    }
    return false;
  };

  bool stop = false;
  for (int epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (size_t start = 0; start < order.size() && !stop; start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<PairExample> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) batch.push_back(train_pairs[order[i]]);
      train_step(model, batch, labeling, cfg, adam_phase ? &adam : nullptr, rng);
      ++step;
      if (step % eval_every == 0) stop = run_eval();
    }
  }
  if (step % eval_every != 0) run_eval();
  result.steps = step;
  result.opt_state = std::move(adam);
  return result;
}

}  // namespace msem
