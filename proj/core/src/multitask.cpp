#include "msem/multitask.hpp"

#include <cmath>

#include "msem/errors.hpp"
#include "msem/rng.hpp"

namespace msem {

ParamStore init_heads(int64_t final_dim, int64_t num_classes, const MatchHeadConfig& cfg,
                      uint64_t seed) {
  if (num_classes < 1) throw ContractError("init_heads: num_classes must be >= 1");
  if (cfg.gamma <= 0) throw ContractError("init_heads: gamma must be positive");
  if (cfg.alpha <= -1.0 || cfg.alpha >= 1.0) throw ContractError("init_heads: alpha must be in (-1,1)");
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(final_dim + num_classes));
  ParamStore heads;
  Tensor w = rng.uniform_tensor({final_dim, num_classes}, -limit, limit);
  for (int64_t i = 0; i < w.size(); ++i)
    w.at(i) = static_cast<double>(static_cast<float>(w.at(i)));
  heads["intent.W"] = std::move(w);
  heads["intent.b"] = Tensor({num_classes});
  heads["match.gamma"] = Tensor::scalar(cfg.gamma);
  heads["match.alpha"] = Tensor::scalar(cfg.alpha);
  return heads;
}

int cosine(Tape& tape, int u, int v) {
  int dot = tape.sum_all(tape.hadamard(u, v));
  int nu = tape.sqrt_(tape.sum_all(tape.hadamard(u, u)));
  int nv = tape.sqrt_(tape.sum_all(tape.hadamard(v, v)));
  if (tape.val(nu).item() == 0.0 || tape.val(nv).item() == 0.0) {
    throw DataError("cosine: zero-norm vector");
  }
  return tape.divide(dot, tape.hadamard(nu, nv));
}

int cosine_match_score(Tape& tape, int u, int v, const ParamIds& p) {
  int c = cosine(tape, u, v);
  int centered = tape.sub(c, p.at("match.alpha"));
  return tape.sigmoid(tape.hadamard(p.at("match.gamma"), centered));
}

double cosine_match_score_value(double cosine, double gamma, double alpha) {
  const double z = gamma * (cosine - alpha);
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

int matching_loss(Tape& tape, int y_hat, int label) {
  if (label != 0 && label != 1) throw ContractError("matching_loss: label must be 0 or 1");
  int clamped = tape.clamp(y_hat, 1e-7, 1.0 - 1e-7);
  if (label == 1) return tape.scale(tape.log_(clamped), -1.0);
  return tape.scale(tape.log_(tape.add_const(tape.scale(clamped, -1.0), 1.0)), -1.0);
}

int intent_loss(Tape& tape, int u, int64_t class_index, const ParamIds& p) {
  const int64_t m = tape.val(p.at("intent.b")).size();
  if (class_index < 0 || class_index >= m) {
    throw ContractError("intent_loss: class " + std::to_string(class_index) + " out of range [0," +
                        std::to_string(m) + ")");
  }
  int logits = tape.add_rowvec(tape.matmul(u, p.at("intent.W")), p.at("intent.b"));
  return tape.cross_entropy(logits, class_index);
}

int combined_loss(Tape& tape, int l_match, int l_u, int l_v, const LossWeights& w) {
  if (w.lambda < 0.0 || w.lambda > 1.0) throw ContractError("combined_loss: lambda must be in [0,1]");
  int match_part = tape.scale(l_match, w.lambda);
  int intent_part = tape.scale(tape.add(l_u, l_v), (1.0 - w.lambda) / 2.0);
  return tape.add(match_part, intent_part);
}

}  // namespace msem
