#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gshield/matrix.hpp"

namespace gshield {

using NodeId = std::size_t;

/// Unordered node pair, stored with u < v once inside a Graph.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Raised when graph construction inputs violate an invariant. violation()
/// is a short stable identifier such as "self-loop".
class GraphError : public std::invalid_argument {
 public:
  GraphError(std::string violation, const std::string& detail)
      : std::invalid_argument(violation + ": " + detail),
        violation_(std::move(violation)) {}
  const std::string& violation() const { return violation_; }

 private:
  std::string violation_;
};

/// Undirected, simple, attributed graph. Immutable once built.
class Graph {
 public:
  /// Validates and canonicalizes. Duplicate edges (in either orientation)
  /// collapse to one. Throws GraphError naming the violated invariant:
  /// "endpoint-out-of-range", "self-loop", "feature-row-count",
  /// "non-finite-feature", "negative-label".
  static Graph build(std::size_t node_count, std::vector<Edge> edges,
                     DenseMatrix features,
                     std::optional<int> label = std::nullopt);

  static Graph build(std::size_t node_count, std::vector<Edge> edges,
                     const std::vector<std::vector<double>>& features,
                     std::optional<int> label = std::nullopt);

  Graph() = default;

  std::size_t node_count() const { return node_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t feature_dim() const { return features_.cols(); }

  /// Sorted canonical edge list.
  const std::vector<Edge>& edges() const { return edges_; }
  /// Sorted neighbor list of node i.
  std::span<const NodeId> neighbors(NodeId i) const {
    return {neighbor_data_.data() + offsets_[i],
            offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
  bool has_edge(NodeId a, NodeId b) const;

  const DenseMatrix& features() const { return features_; }
  std::span<const double> feature_row(NodeId i) const {
    return features_.row(i);
  }

  const std::optional<int>& label() const { return label_; }
  Graph with_label(std::optional<int> label) const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.node_count_ == b.node_count_ && a.edges_ == b.edges_ &&
           a.features_ == b.features_ && a.label_ == b.label_;
  }

 private:
  std::size_t node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbor_data_;
  DenseMatrix features_;
  std::optional<int> label_;
};

/// Sorted, duplicate-free set of node indices of some parent graph.
class NodeSubset {
 public:
  NodeSubset() = default;

  /// Sorts and deduplicates; throws std::out_of_range for indices >= n.
  static NodeSubset of(std::size_t parent_node_count,
                       std::vector<NodeId> indices);
  static NodeSubset all(std::size_t parent_node_count);

  const std::vector<NodeId>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(NodeId i) const;

  NodeSubset complement(std::size_t parent_node_count) const;
  NodeSubset intersect(const NodeSubset& other) const;

  friend bool operator==(const NodeSubset&, const NodeSubset&) = default;

 private:
  std::vector<NodeId> indices_;
};

/// Graph on `nodes` with every parent edge whose endpoints both lie in
/// `nodes`; node i of the result is the i-th smallest index of `nodes`.
/// Throws std::invalid_argument for an empty subset.
Graph induced_subgraph(const Graph& g, const NodeSubset& nodes);

/// Symmetric 0/1 matrix with zero diagonal.
using AdjacencyMatrix = DenseMatrix;

AdjacencyMatrix adjacency(const Graph& g);

/// Edge density 2|E| / (n (n - 1)); 0 for graphs with fewer than 2 nodes.
double edge_density(const Graph& g);

}  // namespace gshield
