#pragma once

#include <span>
#include <string>
#include <vector>

#include "msem/graph.hpp"
#include "msem/metrics.hpp"
#include "msem/model.hpp"
#include "msem/optimizer.hpp"

namespace msem {

struct TrainConfig {
  double adam_lr = 4e-4;
  double sgd_lr = 1e-3;
  int batch_size = 200;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int patience = 3;     // consecutive non-improving evaluations before the phase change
  int max_epochs = 20;
  int eval_every = 0;   // steps; 0 = once per epoch
  double lambda = 0.8;
  double threshold = 0.5;
  uint64_t seed = 42;
  bool verbose = false;
};

struct TrainHistory {
  struct Entry {
    int64_t step = 0;
    double metric = 0.0;
    bool improved = false;
    std::string phase;  // "adam" or "sgd"
  };
  std::vector<Entry> entries;
  int64_t switch_step = -1;  // step of the one Adam -> SGD switch, or -1
};

struct TrainResult {
  Model best;
  double best_metric = 0.0;
  int64_t steps = 0;
  TrainHistory history;
  AdamState opt_state;
};

// One averaged mini-batch update. Uses Adam when state != nullptr, plain
// SGD at sgd_lr otherwise. Returns mean combined loss over the batch.
double train_step(Model& model, std::span<const PairExample> batch, const IntentLabeling& labeling,
                  const TrainConfig& cfg, AdamState* state, Rng& dropout_rng);

// Full loop: shuffled batches, periodic validation, Adam until `patience`
// consecutive non-improving evaluations, then SGD until it stalls again
// (or max_epochs). Returns the best-validation model.
TrainResult train(const std::vector<PairExample>& train_pairs,
                  const std::vector<PairExample>& val_pairs, const IntentLabeling& labeling,
                  Model model, const TrainConfig& cfg);

Metrics evaluate(const Model& model, const std::vector<PairExample>& pairs,
                 double threshold = 0.5);

// Eval-mode cosine between two encoded sentences.
double pair_cosine(const Model& model, const std::vector<std::string>& q1,
                   const std::vector<std::string>& q2);

}  // namespace msem
