#pragma once

#include <cstdint>
#include <string>

#include "msem/checkpoint.hpp"
#include "msem/data.hpp"
#include "msem/encoder.hpp"
#include "msem/multitask.hpp"
#include "msem/optimizer.hpp"

namespace msem {

// Everything needed to encode and score: encoder weights, intent and
// matching heads, and the vocabularies the ids were built against.
struct Model {
  EncoderConfig config;
  Vocab word_vocab;
  Vocab char_vocab;
  int64_t num_classes = 1;
  ParamStore params;  // encoder tensors plus intent.* / match.*

  static Model init(const EncoderConfig& cfg, Vocab word_vocab, Vocab char_vocab,
                    int64_t num_classes, const MatchHeadConfig& match_cfg, uint64_t seed);

  SentenceIds index(const std::vector<std::string>& tokens) const {
    return index_sentence(tokens, word_vocab, char_vocab, config.n_max);
  }
  Tensor encode_sentence(const std::vector<std::string>& tokens) const;

  double match_gamma() const { return params.at("match.gamma").item(); }
  double match_alpha() const { return params.at("match.alpha").item(); }
};

nlohmann::json encoder_config_to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

Checkpoint to_checkpoint(const Model& model, const AdamState* opt_state = nullptr,
                         int64_t step = 0);
Model model_from_checkpoint(const Checkpoint& ckpt);
AdamState optimizer_state_from_checkpoint(const Checkpoint& ckpt);

}  // namespace msem
