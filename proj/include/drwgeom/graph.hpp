#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "drwgeom/errors.hpp"

namespace drwgeom {

// Hard cap for the dense adjacency backend.
inline constexpr int kMaxDenseNodes = 2048;

struct Edge {
  int u = 0;  // 0-based node indices, u < v after normalization
  int v = 0;
  double base_weight = 1.0;
  Eigen::VectorXd feature;
};

// Undirected weighted graph with per-edge features and partial labels.
// Immutable after construction; all invariants checked up front.
class LabeledGraph {
public:
  LabeledGraph(int node_count, int feature_dim, std::vector<Edge> edges,
               std::map<int, int> labels)
      : node_count_(node_count),
        feature_dim_(feature_dim),
        edges_(std::move(edges)),
        labels_(std::move(labels)) {
    validate();
    adjacency_.assign(node_count_, {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      adjacency_[edges_[e].u].push_back(static_cast<int>(e));
      adjacency_[edges_[e].v].push_back(static_cast<int>(e));
    }
  }

  int node_count() const { return node_count_; }
  int feature_dim() const { return feature_dim_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::map<int, int>& labels() const { return labels_; }

  bool is_labeled(int node) const { return labels_.count(node) > 0; }

  std::vector<int> class_ids() const {
    std::set<int> ids;
    for (const auto& [node, cls] : labels_) ids.insert(cls);
    return {ids.begin(), ids.end()};
  }

  std::vector<int> labeled_nodes(int class_id) const {
    std::vector<int> out;
    for (const auto& [node, cls] : labels_)
      if (cls == class_id) out.push_back(node);
    return out;
  }

  std::vector<int> unlabeled_nodes() const {
    std::vector<int> out;
    for (int v = 0; v < node_count_; ++v)
      if (!is_labeled(v)) out.push_back(v);
    return out;
  }

  // indices into edges() incident to `node`
  const std::vector<int>& incident_edges(int node) const { return adjacency_[node]; }

private:
  void validate() const {
    if (node_count_ < 2) throw ParseError("graph needs at least two nodes");
    if (node_count_ > kMaxDenseNodes)
      throw TooLarge("node count exceeds the dense backend cap of 2048");
    if (feature_dim_ < 1) throw FeatureDimMismatch("feature dimension must be >= 1");

    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges_) {
      if (e.u < 0 || e.u >= node_count_ || e.v < 0 || e.v >= node_count_)
        throw ParseError("edge endpoint out of range");
      if (e.u == e.v) throw SelfLoop("self-loop on node " + std::to_string(e.u + 1));
      auto key = std::minmax(e.u, e.v);
      if (!seen.insert(key).second)
        throw DuplicateEdge("edge (" + std::to_string(key.first + 1) + "," +
                            std::to_string(key.second + 1) + ") stored twice");
      if (!(e.base_weight > 0.0))
        throw NonpositiveWeight("base weight must be strictly positive");
      if (e.feature.size() != feature_dim_)
        throw FeatureDimMismatch("edge feature length != feature_dim");
    }
    for (const auto& [node, cls] : labels_) {
      if (node < 0 || node >= node_count_) throw ParseError("label on unknown node");
      if (cls < 1) throw ParseError("class ids must be positive");
    }
    check_connected();
  }

  void check_connected() const {
    std::vector<std::vector<int>> nbr(node_count_);
    for (const Edge& e : edges_) {
      nbr[e.u].push_back(e.v);
      nbr[e.v].push_back(e.u);
    }
    std::vector<char> seen(node_count_, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int w : nbr[u])
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
    }
    if (count != node_count_) throw DisconnectedGraph("graph is not connected");
  }

  int node_count_;
  int feature_dim_;
  std::vector<Edge> edges_;
  std::map<int, int> labels_;
  std::vector<std::vector<int>> adjacency_;
};

// Normalizes edge orientation and builds the validated graph.
inline LabeledGraph build_graph(int node_count, int feature_dim, std::vector<Edge> edges,
                                std::map<int, int> labels) {
  for (Edge& e : edges)
    if (e.u > e.v) std::swap(e.u, e.v);
  return LabeledGraph(node_count, feature_dim, std::move(edges), std::move(labels));
}

}  // namespace drwgeom
