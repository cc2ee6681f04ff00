#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "msem/data.hpp"

namespace msem {

// Undirected paraphrase graph: a vertex per distinct question string, an
// edge per positive pair. Connected components become intent clusters.
class ParaphraseGraph {
 public:
  // Adds the vertex if new; returns its index.
  int64_t add_vertex(const std::string& question);
  void add_edge(const std::string& a, const std::string& b);

  int64_t num_vertices() const { return static_cast<int64_t>(vertices_.size()); }
  const std::vector<std::string>& vertices() const { return vertices_; }
  const std::vector<std::pair<int64_t, int64_t>>& edges() const { return edges_; }

  // Both questions of every pair become vertices; positives become edges.
  static ParaphraseGraph from_train_pairs(const std::vector<PairExample>& train);

 private:
  std::vector<std::string> vertices_;
  std::unordered_map<std::string, int64_t> index_;
  std::vector<std::pair<int64_t, int64_t>> edges_;
  std::set<std::pair<int64_t, int64_t>> edge_set_;
};

// Maximal connected vertex sets via union-find. Components are returned
// sorted by smallest member index; members sorted ascending.
std::vector<std::vector<int64_t>> connected_components(const ParaphraseGraph& graph);

struct IntentLabeling {
  std::unordered_map<std::string, int> classes;  // question -> class index
  int num_classes = 1;                           // M = K + 1
  int other_class = 0;                           // index K

  int class_of(const std::string& question) const {
    auto it = classes.find(question);
    return it == classes.end() ? other_class : it->second;
  }
};

// Components with size >= min_size get consecutive classes 0..K-1 (by
// smallest member index); everything else is the "other" class K.
IntentLabeling assign_intent_labels(const ParaphraseGraph& graph,
                                    const std::vector<std::vector<int64_t>>& components,
                                    int min_size = 4);

}  // namespace msem
