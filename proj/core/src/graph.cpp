#include "msem/graph.hpp"

#include <algorithm>
#include <numeric>

#include "msem/errors.hpp"

namespace msem {

namespace {

class UnionFind {
 public:
  explicit UnionFind(int64_t n) : parent_(static_cast<size_t>(n)), rank_(static_cast<size_t>(n), 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int64_t find(int64_t x) {
    while (parent_[static_cast<size_t>(x)] != x) {
      parent_[static_cast<size_t>(x)] = parent_[static_cast<size_t>(parent_[static_cast<size_t>(x)])];
      x = parent_[static_cast<size_t>(x)];
    }
    return x;
  }

  void unite(int64_t a, int64_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[static_cast<size_t>(a)] < rank_[static_cast<size_t>(b)]) std::swap(a, b);
    parent_[static_cast<size_t>(b)] = a;
    if (rank_[static_cast<size_t>(a)] == rank_[static_cast<size_t>(b)]) ++rank_[static_cast<size_t>(a)];
  }

 private:
  std::vector<int64_t> parent_;
  std::vector<int> rank_;
};

}  // namespace

int64_t ParaphraseGraph::add_vertex(const std::string& question) {
  auto it = index_.find(question);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<int64_t>(vertices_.size());
  vertices_.push_back(question);
  index_[question] = id;
  return id;
}

void ParaphraseGraph::add_edge(const std::string& a, const std::string& b) {
  const int64_t ia = add_vertex(a);
  const int64_t ib = add_vertex(b);
  if (ia == ib) return;  // no self-loops
  const auto key = std::minmax(ia, ib);
  if (edge_set_.insert({key.first, key.second}).second) {
    edges_.emplace_back(key.first, key.second);
  }
}

ParaphraseGraph ParaphraseGraph::from_train_pairs(const std::vector<PairExample>& train) {
  ParaphraseGraph g;
  for (const auto& ex : train) {
    g.add_vertex(ex.raw1);
    g.add_vertex(ex.raw2);
    if (ex.label == 1) g.add_edge(ex.raw1, ex.raw2);
  }
  return g;
}

std::vector<std::vector<int64_t>> connected_components(const ParaphraseGraph& graph) {
  const int64_t n = graph.num_vertices();
  UnionFind uf(n);
  for (const auto& [a, b] : graph.edges()) uf.unite(a, b);
  std::unordered_map<int64_t, std::vector<int64_t>> by_root;
  for (int64_t v = 0; v < n; ++v) by_root[uf.find(v)].push_back(v);
  std::vector<std::vector<int64_t>> components;
  components.reserve(by_root.size());
  for (auto& [root, members] : by_root) {
    std::sort(members.begin(), members.end());
    components.push_back(std::move(members));
  }
  std::sort(components.begin(), components.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return components;
}

IntentLabeling assign_intent_labels(const ParaphraseGraph& graph,
                                    const std::vector<std::vector<int64_t>>& components,
                                    int min_size) {
  if (min_size < 1) throw ContractError("assign_intent_labels: min_size must be >= 1");
  IntentLabeling labeling;
  int next_class = 0;
  std::vector<const std::vector<int64_t>*> small;
  for (const auto& comp : components) {
    if (static_cast<int>(comp.size()) >= min_size) {
      for (int64_t v : comp)
        labeling.classes[graph.vertices()[static_cast<size_t>(v)]] = next_class;
      ++next_class;
    } else {
      small.push_back(&comp);
    }
  }
  labeling.other_class = next_class;
  labeling.num_classes = next_class + 1;
  for (const auto* comp : small) {
    for (int64_t v : *comp)
      labeling.classes[graph.vertices()[static_cast<size_t>(v)]] = labeling.other_class;
  }
  return labeling;
}

}  // namespace msem
