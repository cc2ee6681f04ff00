#pragma once

#include <cstdint>

#include "msem/grad_check.hpp"
#include "msem/tape.hpp"

namespace msem {

// Matching head: y_hat = sigmoid(gamma * (cos(u, v) - alpha)). gamma and
// alpha live in the parameter store as 1-element tensors so they train.
struct MatchHeadConfig {
  double gamma = 10.0;
  double alpha = 0.5;
};

struct LossWeights {
  double lambda = 0.8;
};

// Intent head parameters and matching-head scalars, created alongside the
// encoder weights and stored in the same checkpoint.
ParamStore init_heads(int64_t final_dim, int64_t num_classes, const MatchHeadConfig& cfg,
                      uint64_t seed);

// cos(u, v) on the tape; throws DataError on a zero-norm vector.
int cosine(Tape& tape, int u, int v);

// sigmoid(gamma * (cos - alpha)) with trainable gamma/alpha.
int cosine_match_score(Tape& tape, int u, int v, const ParamIds& p);

// Plain-value variant for serving: no tape, parameters by value.
double cosine_match_score_value(double cosine, double gamma, double alpha);

// Binary cross-entropy against the gold label; y_hat clamped to
// [1e-7, 1 - 1e-7] before the logs.
int matching_loss(Tape& tape, int y_hat, int label);

// Cross-entropy of softmax(u W + b) against class_index.
int intent_loss(Tape& tape, int u, int64_t class_index, const ParamIds& p);

// lambda * L_match + (1 - lambda) * (L_u + L_v) / 2.
int combined_loss(Tape& tape, int l_match, int l_u, int l_v, const LossWeights& w);

}  // namespace msem
