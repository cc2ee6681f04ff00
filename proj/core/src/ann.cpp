#include "msem/ann.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <unordered_set>

#include "msem/binio.hpp"
#include "msem/errors.hpp"
#include "msem/rng.hpp"

namespace msem {

namespace {

constexpr char kMagic[4] = {'A', 'N', 'N', 'X'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kMetricCosine = 0;

void sort_result(SearchResult& r) {
  std::sort(r.begin(), r.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
}

std::vector<double> normalize_or_throw(const std::vector<double>& v, const std::string& what) {
  double norm2 = 0;
  for (double x : v) norm2 += x * x;
  if (norm2 == 0.0) throw DataError("zero vector: " + what);
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv;
  return out;
}

}  // namespace

int32_t AnnIndex::build_node(Tree& tree, std::vector<uint32_t> items, Rng& rng) const {
  const auto node_id = static_cast<int32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (items.size() <= leaf_capacity_) {
    tree.nodes[static_cast<size_t>(node_id)].items = std::move(items);
    return node_id;
  }
  // Random unit direction; the split offset is the median projection, so
  // every split halves the item set and the depth bound holds.
  std::vector<float> normal(static_cast<size_t>(dim_));
  double norm2 = 0;
  for (auto& x : normal) {
    x = static_cast<float>(rng.normal());
    norm2 += static_cast<double>(x) * x;
  }
  const auto inv = static_cast<float>(1.0 / std::sqrt(norm2));
  for (auto& x : normal) x *= inv;

  std::vector<std::pair<float, uint32_t>> proj(items.size());
  for (size_t i = 0; i < items.size(); ++i) {
    const float* v = vector_at(items[i]);
    double dot = 0;
    for (int64_t j = 0; j < dim_; ++j) dot += static_cast<double>(normal[static_cast<size_t>(j)]) * v[j];
    proj[i] = {static_cast<float>(dot), items[i]};
  }
  std::sort(proj.begin(), proj.end());
  const size_t mid = proj.size() / 2;
  std::vector<uint32_t> left_items, right_items;
  left_items.reserve(mid);
  right_items.reserve(proj.size() - mid);
  for (size_t i = 0; i < mid; ++i) left_items.push_back(proj[i].second);
  for (size_t i = mid; i < proj.size(); ++i) right_items.push_back(proj[i].second);

  tree.nodes[static_cast<size_t>(node_id)].normal = std::move(normal);
  tree.nodes[static_cast<size_t>(node_id)].offset =
      (proj[mid - 1].first + proj[mid].first) * 0.5f;
  const int32_t left = build_node(tree, std::move(left_items), rng);
  const int32_t right = build_node(tree, std::move(right_items), rng);
  tree.nodes[static_cast<size_t>(node_id)].left = left;
  tree.nodes[static_cast<size_t>(node_id)].right = right;
  return node_id;
}

AnnIndex AnnIndex::build(const std::vector<std::pair<uint64_t, std::vector<double>>>& vectors,
                         uint32_t num_trees, uint32_t leaf_capacity, uint64_t seed) {
  if (vectors.empty()) throw DataError("build_index: empty vector set");
  if (num_trees == 0 || leaf_capacity == 0) {
    throw ContractError("build_index: num_trees and leaf_capacity must be positive");
  }
  AnnIndex index;
  index.dim_ = static_cast<int64_t>(vectors.front().second.size());
  index.leaf_capacity_ = leaf_capacity;
  index.seed_ = seed;
  std::unordered_set<uint64_t> seen;
  for (const auto& [id, vec] : vectors) {
    if (static_cast<int64_t>(vec.size()) != index.dim_) {
      throw ShapeError("build_index: vector dimension mismatch for id " + std::to_string(id));
    }
    if (!seen.insert(id).second) throw DataError("build_index: duplicate id " + std::to_string(id));
    const auto unit = normalize_or_throw(vec, "id " + std::to_string(id));
    index.ids_.push_back(id);
    for (double x : unit) index.data_.push_back(static_cast<float>(x));
  }
  std::vector<uint32_t> all(index.ids_.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<uint32_t>(i);
  index.trees_.resize(num_trees);
  for (uint32_t t = 0; t < num_trees; ++t) {
    Rng rng(seed + 0x9E3779B97F4A7C15ULL * (t + 1));
    index.build_node(index.trees_[t], all, rng);
  }
  return index;
}

SearchResult AnnIndex::query_topk(const std::vector<double>& query, int64_t k,
                                  int64_t search_budget) const {
  if (ids_.empty()) throw DataError("query_topk: empty index");
  if (static_cast<int64_t>(query.size()) != dim_) {
    throw ShapeError("query_topk: query dimension " + std::to_string(query.size()) +
                     " does not match index dimension " + std::to_string(dim_));
  }
  if (k < 1) throw ContractError("query_topk: k must be >= 1");
  if (search_budget <= 0) {
    search_budget = std::max<int64_t>(2 * k * static_cast<int64_t>(trees_.size()), 200);
  }
  if (search_budget < k) search_budget = k;
  const auto q = normalize_or_throw(query, "query");

  // Forest-wide best-first traversal over hyperplane margins.
  struct Entry {
    double priority;
    uint32_t tree;
    int32_t node;
    bool operator<(const Entry& o) const { return priority < o.priority; }
  };
  std::priority_queue<Entry> pq;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (uint32_t t = 0; t < trees_.size(); ++t) pq.push({kInf, t, 0});

  std::vector<char> seen(ids_.size(), 0);
  std::vector<uint32_t> candidates;
  while (!pq.empty() && static_cast<int64_t>(candidates.size()) < search_budget) {
    const Entry e = pq.top();
    pq.pop();
    const Node& node = trees_[e.tree].nodes[static_cast<size_t>(e.node)];
    if (node.is_leaf()) {
      for (uint32_t item : node.items) {
        if (!seen[item]) {
          seen[item] = 1;
          candidates.push_back(item);
        }
      }
      continue;
    }
    double proj = 0;
    for (int64_t j = 0; j < dim_; ++j)
      proj += static_cast<double>(node.normal[static_cast<size_t>(j)]) * q[static_cast<size_t>(j)];
    const double margin = std::abs(proj - static_cast<double>(node.offset));
    const int32_t near = proj < node.offset ? node.left : node.right;
    const int32_t far = proj < node.offset ? node.right : node.left;
    pq.push({e.priority, e.tree, near});
    pq.push({std::min(e.priority, margin), e.tree, far});
  }

  SearchResult result;
  result.reserve(candidates.size());
  for (uint32_t item : candidates) {
    const float* v = vector_at(item);
    double dot = 0;
    for (int64_t j = 0; j < dim_; ++j) dot += static_cast<double>(v[j]) * q[static_cast<size_t>(j)];
    result.push_back({ids_[item], dot});
  }
  sort_result(result);
  if (static_cast<int64_t>(result.size()) > k) result.resize(static_cast<size_t>(k));
  return result;
}

std::vector<std::vector<uint64_t>> AnnIndex::tree_leaves(uint32_t tree) const {
  std::vector<std::vector<uint64_t>> leaves;
  for (const Node& n : trees_.at(tree).nodes) {
    if (!n.is_leaf()) continue;
    std::vector<uint64_t> ids;
    ids.reserve(n.items.size());
    for (uint32_t item : n.items) ids.push_back(ids_[item]);
    leaves.push_back(std::move(ids));
  }
  return leaves;
}

void AnnIndex::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open index for writing: " + path);
  os.write(kMagic, 4);
  binio::write_u32(os, kVersion);
  binio::write_u32(os, static_cast<uint32_t>(dim_));
  binio::write_u8(os, kMetricCosine);
  binio::write_u64(os, ids_.size());
  binio::write_u32(os, static_cast<uint32_t>(trees_.size()));
  binio::write_u32(os, leaf_capacity_);
  binio::write_u64(os, seed_);
  for (uint64_t id : ids_) binio::write_u64(os, id);
  for (float x : data_) binio::write_f32(os, x);
  // Preorder per tree: tag byte, then leaf items or split + both subtrees.
  for (const Tree& tree : trees_) {
    std::vector<int32_t> stack{0};
    while (!stack.empty()) {
      const Node& n = tree.nodes[static_cast<size_t>(stack.back())];
      stack.pop_back();
      if (n.is_leaf()) {
        binio::write_u8(os, 1);
        binio::write_u32(os, static_cast<uint32_t>(n.items.size()));
        for (uint32_t item : n.items) binio::write_u32(os, item);
      } else {
        binio::write_u8(os, 0);
        for (float x : n.normal) binio::write_f32(os, x);
        binio::write_f32(os, n.offset);
        stack.push_back(n.right);
        stack.push_back(n.left);
      }
    }
  }
  if (!os) throw IoError("write failure on index: " + path);
}

AnnIndex AnnIndex::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open index: " + path);
  char magic[4];
  binio::read_exact(is, magic, 4, "magic");
  if (std::string(magic, 4) != std::string(kMagic, 4)) throw MagicError("bad index magic in " + path);
  const uint32_t version = binio::read_u32(is, "version");
  if (version != kVersion) {
    throw VersionError("index version " + std::to_string(version) + " unsupported, expected " +
                       std::to_string(kVersion));
  }
  AnnIndex index;
  index.dim_ = binio::read_u32(is, "dim");
  const uint8_t metric = binio::read_u8(is, "metric");
  if (metric != kMetricCosine) throw IoError("unknown metric tag " + std::to_string(metric));
  const uint64_t count = binio::read_u64(is, "count");
  const uint32_t num_trees = binio::read_u32(is, "num_trees");
  index.leaf_capacity_ = binio::read_u32(is, "leaf_capacity");
  index.seed_ = binio::read_u64(is, "seed");
  index.ids_.resize(count);
  for (uint64_t i = 0; i < count; ++i) index.ids_[i] = binio::read_u64(is, "id");
  index.data_.resize(count * static_cast<uint64_t>(index.dim_));
  for (auto& x : index.data_) x = binio::read_f32(is, "vector data");
  index.trees_.resize(num_trees);
  for (Tree& tree : index.trees_) {
    // Rebuild from preorder: read one node, recurse via explicit stack of
    // parent slots awaiting children.
    struct Slot { int32_t parent; bool left; };
    std::vector<Slot> pending{{-1, false}};
    while (!pending.empty()) {
      const Slot slot = pending.back();
      pending.pop_back();
      const auto node_id = static_cast<int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      if (slot.parent >= 0) {
        Node& parent = tree.nodes[static_cast<size_t>(slot.parent)];
        (slot.left ? parent.left : parent.right) = node_id;
      }
      const uint8_t tag = binio::read_u8(is, "node tag");
      if (tag == 1) {
        const uint32_t n = binio::read_u32(is, "leaf size");
        auto& items = tree.nodes[static_cast<size_t>(node_id)].items;
        items.resize(n);
        for (uint32_t i = 0; i < n; ++i) {
          items[i] = binio::read_u32(is, "leaf item");
          if (items[i] >= count) throw IoError("leaf item out of range");
        }
      } else if (tag == 0) {
        Node& node = tree.nodes[static_cast<size_t>(node_id)];
        node.normal.resize(static_cast<size_t>(index.dim_));
        for (auto& x : node.normal) x = binio::read_f32(is, "split normal");
        node.offset = binio::read_f32(is, "split offset");
        // right child is read after the whole left subtree
        pending.push_back({node_id, false});
        pending.push_back({node_id, true});
      } else {
        throw IoError("bad node tag " + std::to_string(tag));
      }
    }
  }
  return index;
}

SearchResult brute_force_topk(const std::vector<std::pair<uint64_t, std::vector<double>>>& vectors,
                              const std::vector<double>& query, int64_t k) {
  if (vectors.empty()) throw DataError("brute_force_topk: empty vector set");
  if (k < 1) throw ContractError("brute_force_topk: k must be >= 1");
  const auto q = normalize_or_throw(query, "query");
  SearchResult result;
  result.reserve(vectors.size());
  for (const auto& [id, vec] : vectors) {
    if (vec.size() != q.size()) {
      throw ShapeError("brute_force_topk: dimension mismatch for id " + std::to_string(id));
    }
    const auto unit = normalize_or_throw(vec, "id " + std::to_string(id));
    double dot = 0;
    for (size_t j = 0; j < q.size(); ++j) dot += unit[j] * q[j];
    result.push_back({id, dot});
  }
  sort_result(result);
  if (static_cast<int64_t>(result.size()) > k) result.resize(static_cast<size_t>(k));
  return result;
}

double recall_at_k(const SearchResult& approx, const SearchResult& exact, int64_t k) {
  const auto kk = static_cast<size_t>(k);
  std::unordered_set<uint64_t> exact_ids;
  for (size_t i = 0; i < exact.size() && i < kk; ++i) exact_ids.insert(exact[i].id);
  if (exact_ids.empty()) return 0.0;
  int64_t hit = 0;
  for (size_t i = 0; i < approx.size() && i < kk; ++i)
    if (exact_ids.count(approx[i].id)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(k);
}

}  // namespace msem
