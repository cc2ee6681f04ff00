#include "msem/retrieval.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "msem/errors.hpp"

namespace msem {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> encode_to_vector(const Model& model, const std::string& text) {
  const Tensor v = model.encode_sentence(tokenize(text));
  return v.vec();
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void build_offline(const std::string& faq_tsv_path, const std::string& checkpoint_path,
                   const IndexParams& params, const std::string& out_dir) {
  const auto entries = load_faq_tsv(faq_tsv_path);
  if (entries.empty()) throw DataError("build_offline: FAQ file is empty: " + faq_tsv_path);
  const Checkpoint ckpt = checkpoint_load(checkpoint_path);
  const Model model = model_from_checkpoint(ckpt);

  std::vector<std::pair<uint64_t, std::vector<double>>> vectors;
  vectors.reserve(entries.size());
  for (const auto& e : entries) vectors.emplace_back(e.id, encode_to_vector(model, e.question));

  AnnIndex index = AnnIndex::build(vectors, params.num_trees, params.leaf_capacity, params.seed);

  fs::create_directories(out_dir);
  index.save((fs::path(out_dir) / "index.annx").string());
  fs::copy_file(checkpoint_path, fs::path(out_dir) / "checkpoint.msem",
                fs::copy_options::overwrite_existing);
  {
    std::ofstream store((fs::path(out_dir) / "store.tsv").string(), std::ios::trunc);
    for (const auto& e : entries)
      store << e.id << '\t' << e.question << '\t' << e.answer << '\n';
    if (!store) throw IoError("cannot write store.tsv under " + out_dir);
  }
  json manifest = {
      {"checkpoint_sha256", sha256_file((fs::path(out_dir) / "checkpoint.msem").string())},
      {"config", ckpt.config},
      {"index_params",
       {{"num_trees", params.num_trees},
        {"leaf_capacity", params.leaf_capacity},
        {"seed", params.seed}}},
      {"item_count", entries.size()},
      {"built_at", iso8601_now()},
  };
  std::ofstream mf((fs::path(out_dir) / "manifest.json").string(), std::ios::trunc);
  mf << manifest.dump(2) << "\n";
  if (!mf) throw IoError("cannot write manifest.json under " + out_dir);
}

RetrievalArtifacts RetrievalArtifacts::load(const std::string& dir) {
  const fs::path base(dir);
  std::ifstream mf((base / "manifest.json").string());
  if (!mf) throw DataError("missing manifest.json under " + dir);
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::parse_error& e) {
    throw DataError(std::string("bad manifest.json: ") + e.what());
  }
  const std::string ckpt_path = (base / "checkpoint.msem").string();
  const std::string expected_sha = manifest.at("checkpoint_sha256");
  const std::string actual_sha = sha256_file(ckpt_path);
  if (actual_sha != expected_sha) {
    throw DataError("checkpoint hash mismatch: manifest pins " + expected_sha + " but file is " +
                    actual_sha);
  }
  RetrievalArtifacts a;
  a.model_ = model_from_checkpoint(checkpoint_load(ckpt_path));
  a.index_ = AnnIndex::load((base / "index.annx").string());
  for (const auto& e : load_faq_tsv((base / "store.tsv").string())) {
    a.store_[e.id] = FaqEntry{e.id, e.question, e.answer};
  }
  if (static_cast<int64_t>(a.store_.size()) != a.index_.size()) {
    throw DataError("store/index item count mismatch under " + dir);
  }
  return a;
}

QueryResult RetrievalArtifacts::answer_query(const std::string& text, int64_t k) const {
  if (k < 1) throw ContractError("answer_query: k must be >= 1");
  const auto query_vec = encode_to_vector(model_, text);  // throws DataError on empty text
  const int64_t kk = std::min<int64_t>(k, index_.size());
  const SearchResult hits = index_.query_topk(query_vec, kk);
  const double gamma = model_.match_gamma();
  const double alpha = model_.match_alpha();
  QueryResult result;
  result.reserve(hits.size());
  for (const auto& h : hits) {
    auto it = store_.find(h.id);
    if (it == store_.end()) throw DataError("index id " + std::to_string(h.id) + " missing from store");
    result.push_back({h.id, it->second.question, it->second.answer,
                      cosine_match_score_value(h.score, gamma, alpha), h.score});
  }
  // y_hat is monotone in cosine, so the ANN order already descends by score.
  if (rerank_) rerank_(result);
  return result;
}

}  // namespace msem
