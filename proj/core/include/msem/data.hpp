#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "msem/rng.hpp"
#include "msem/tensor.hpp"

namespace msem {

struct PairExample {
  std::vector<std::string> q1;
  std::vector<std::string> q2;
  int label = 0;  // 1 = paraphrase
  std::optional<int> intent1;
  std::optional<int> intent2;
  // Original strings, kept for graph construction and diagnostics.
  std::string raw1;
  std::string raw2;
  int line = 0;
};

// Lowercase, split on Unicode whitespace, ASCII punctuation split off as
// separate tokens. Multi-byte sequences are kept intact.
std::vector<std::string> tokenize(const std::string& text);

struct Vocab {
  static constexpr int64_t kPad = 0;
  static constexpr int64_t kUnk = 1;

  std::unordered_map<std::string, int64_t> index;
  std::vector<std::string> tokens;  // tokens[0]="<pad>", tokens[1]="<unk>"

  Vocab();
  int64_t size() const { return static_cast<int64_t>(tokens.size()); }
  int64_t id(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? kUnk : it->second;
  }
  void add(const std::string& tok);
};

std::vector<PairExample> load_pairs_tsv(const std::string& path);

// Tokens with frequency >= min_count, ordered by frequency desc then
// lexicographic, after the reserved PAD/UNK slots.
Vocab build_vocab(const std::vector<PairExample>& examples, int min_count = 1);

// Character vocabulary over all question tokens.
Vocab build_char_vocab(const std::vector<PairExample>& examples);

// Rows for tokens found in the file come from the file; missing tokens and
// UNK are uniform(-0.05, 0.05) from rng; the PAD row is zero.
Tensor load_pretrained_embeddings(const std::string& path, const Vocab& vocab, int64_t dim,
                                  Rng& rng);

double overlap_rate(const std::vector<std::string>& q1, const std::vector<std::string>& q2);

struct OverlapStats {
  double positive = 0.0;
  double negative = 0.0;
  double all = 0.0;
  int64_t n_pos = 0;
  int64_t n_neg = 0;
};

OverlapStats corpus_overlap_stats(const std::vector<PairExample>& examples);

struct FaqEntryRecord {
  uint64_t id = 0;
  std::string question;
  std::string answer;
};

// "id\tquestion\tanswer" lines.
std::vector<FaqEntryRecord> load_faq_tsv(const std::string& path);

}  // namespace msem
