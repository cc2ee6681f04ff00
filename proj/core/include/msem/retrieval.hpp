#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "msem/ann.hpp"
#include "msem/model.hpp"

namespace msem {

struct IndexParams {
  uint32_t num_trees = 16;
  uint32_t leaf_capacity = 32;
  uint64_t seed = 1;
};

struct FaqEntry {
  uint64_t id = 0;
  std::string question;
  std::string answer;
};

struct QueryHit {
  uint64_t id = 0;
  std::string question;
  std::string answer;
  double score = 0.0;   // y_hat = sigmoid(gamma * (cosine - alpha))
  double cosine = 0.0;
};
using QueryResult = std::vector<QueryHit>;  // descending score

// Loaded artifact set for online answering. Immutable once loaded; safe to
// share across request threads.
class RetrievalArtifacts {
 public:
  static RetrievalArtifacts load(const std::string& dir);

  QueryResult answer_query(const std::string& text, int64_t k) const;

  // Optional post-ANN re-rank hook; receives the scored candidates and may
  // reorder or filter them. Identity by default.
  using RerankHook = std::function<void(QueryResult&)>;
  void set_rerank_hook(RerankHook hook) { rerank_ = std::move(hook); }

  int64_t item_count() const { return index_.size(); }
  const Model& model() const { return model_; }

 private:
  RetrievalArtifacts() = default;

  Model model_;
  AnnIndex index_;
  std::unordered_map<uint64_t, FaqEntry> store_;
  RerankHook rerank_;
};

// Offline pipeline: encode every FAQ question in eval mode, build and save
// the index, the answer store, and a manifest pinning the checkpoint hash.
void build_offline(const std::string& faq_tsv_path, const std::string& checkpoint_path,
                   const IndexParams& params, const std::string& out_dir);

}  // namespace msem
