#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "msem/data.hpp"
#include "msem/grad_check.hpp"
#include "msem/rng.hpp"
#include "msem/tape.hpp"

namespace msem {

struct EncoderConfig {
  int64_t word_dim = 300;
  int64_t char_dim = 150;
  int64_t char_kernel = 3;
  int64_t char_filters = 150;
  int64_t gru_hidden = 300;
  int64_t heads = 6;
  int64_t d_a = 300;
  int64_t r_hops = 4;
  int64_t n_max = 64;
  int64_t ffn_inner = 0;  // 0 means u()
  double dropout = 0.1;

  int64_t u() const { return 2 * gru_hidden; }
  int64_t d_in() const { return word_dim + char_filters; }
  int64_t d_k() const { return u() / heads; }
  int64_t inner() const { return ffn_inner > 0 ? ffn_inner : u(); }
  int64_t final_dim() const { return r_hops * u(); }

  void validate() const;

  // Small configuration for gradient checks and toy training.
  static EncoderConfig tiny();
};

struct EncoderWeights {
  EncoderConfig config;
  int64_t word_vocab_size = 0;
  int64_t char_vocab_size = 0;
  ParamStore params;

  static EncoderWeights init(const EncoderConfig& cfg, int64_t word_vocab, int64_t char_vocab,
                             uint64_t seed);
  void set_word_embeddings(const Tensor& table);
};

// Token and per-token character indices, truncated to n_max.
struct SentenceIds {
  std::vector<int64_t> words;
  std::vector<std::vector<int64_t>> chars;
  int64_t length() const { return static_cast<int64_t>(words.size()); }
};

SentenceIds index_sentence(const std::vector<std::string>& tokens, const Vocab& word_vocab,
                           const Vocab& char_vocab, int64_t n_max);

// Incremented whenever index_sentence truncates an over-long sentence.
std::atomic<uint64_t>& truncation_counter();

// Forward pieces. Each takes parameter leaf ids already on the tape and
// returns the node id of its output.
int char_conv_maxpool(Tape& tape, const ParamIds& p, const std::vector<int64_t>& chars,
                      const EncoderConfig& cfg);
int embed_words(Tape& tape, const ParamIds& p, const SentenceIds& sent, const EncoderConfig& cfg);
int bigru_forward(Tape& tape, const ParamIds& p, int x, const EncoderConfig& cfg);
int pos_multihead_attention(Tape& tape, const ParamIds& p, int x, const EncoderConfig& cfg);
int aru_forward(Tape& tape, const ParamIds& p, int x, const EncoderConfig& cfg);
int ffn_add_norm(Tape& tape, const ParamIds& p, int o, const EncoderConfig& cfg);
int attentive_pool(Tape& tape, const ParamIds& p, int o, const EncoderConfig& cfg);
int highway_net(Tape& tape, const ParamIds& p, int v, const EncoderConfig& cfg);

// Full pipeline; dropout_rng is only consulted in train mode.
int encode(Tape& tape, const ParamIds& p, const SentenceIds& sent, const EncoderConfig& cfg,
           bool train_mode = false, Rng* dropout_rng = nullptr);

// Eval-mode convenience: one sentence to one plain vector.
Tensor encode_eval(const EncoderWeights& weights, const SentenceIds& sent);

}  // namespace msem
