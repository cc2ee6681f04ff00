#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace msem {

struct Neighbor {
  uint64_t id = 0;
  double score = 0.0;  // cosine, in [-1, 1]
};
using SearchResult = std::vector<Neighbor>;  // descending score, ties by ascending id

// Forest of random-projection trees over unit-normalized vectors. Immutable
// after build; concurrent queries need no locking.
class AnnIndex {
 public:
  static AnnIndex build(const std::vector<std::pair<uint64_t, std::vector<double>>>& vectors,
                        uint32_t num_trees, uint32_t leaf_capacity, uint64_t seed);

  // Gathers `search_budget` candidates across the forest (default
  // max(2k * num_trees, 200)), scores them by exact cosine, returns top k.
  SearchResult query_topk(const std::vector<double>& query, int64_t k,
                          int64_t search_budget = 0) const;

  int64_t dim() const { return dim_; }
  int64_t size() const { return static_cast<int64_t>(ids_.size()); }
  uint32_t num_trees() const { return static_cast<uint32_t>(trees_.size()); }
  uint32_t leaf_capacity() const { return leaf_capacity_; }
  uint64_t seed() const { return seed_; }

  // Stored (normalized) vector by position, for oracle checks.
  const float* vector_at(int64_t pos) const { return data_.data() + pos * dim_; }
  uint64_t id_at(int64_t pos) const { return ids_[static_cast<size_t>(pos)]; }

  // Leaf id sets of one tree, for structural checks.
  std::vector<std::vector<uint64_t>> tree_leaves(uint32_t tree) const;

  void save(const std::string& path) const;
  static AnnIndex load(const std::string& path);

 private:
  struct Node {
    // tag 0: internal split (normal, offset, children); tag 1: leaf (items)
    std::vector<float> normal;
    float offset = 0.0f;
    int32_t left = -1;
    int32_t right = -1;
    std::vector<uint32_t> items;
    bool is_leaf() const { return left < 0; }
  };
  struct Tree {
    std::vector<Node> nodes;  // nodes[0] is the root
  };

  int32_t build_node(Tree& tree, std::vector<uint32_t> items, class Rng& rng) const;

  int64_t dim_ = 0;
  uint32_t leaf_capacity_ = 0;
  uint64_t seed_ = 0;
  std::vector<uint64_t> ids_;
  std::vector<float> data_;  // count * dim, unit-normalized rows
  std::vector<Tree> trees_;
};

// Exact cosine top-k over a plain vector set, same tie rule as the index.
SearchResult brute_force_topk(const std::vector<std::pair<uint64_t, std::vector<double>>>& vectors,
                              const std::vector<double>& query, int64_t k);

// |approx top-k ids  ∩  exact top-k ids| / k.
double recall_at_k(const SearchResult& approx, const SearchResult& exact, int64_t k);

}  // namespace msem
