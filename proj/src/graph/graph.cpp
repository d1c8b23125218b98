#include "gshield/graph.hpp"

#include <algorithm>
#include <cmath>

namespace gshield {

Graph Graph::build(std::size_t node_count, std::vector<Edge> edges,
                   DenseMatrix features, std::optional<int> label) {
  if (features.rows() != node_count) {
    throw GraphError("feature-row-count",
                     "expected " + std::to_string(node_count) +
                         " feature rows, got " +
                         std::to_string(features.rows()));
  }
  for (double x : features.data()) {
    if (!std::isfinite(x)) {
      throw GraphError("non-finite-feature", "feature matrix has NaN or Inf");
    }
  }
  if (label && *label < 0) {
    throw GraphError("negative-label", std::to_string(*label));
  }
  for (auto& e : edges) {
    if (e.u >= node_count || e.v >= node_count) {
      throw GraphError("endpoint-out-of-range",
                       "edge (" + std::to_string(e.u) + "," +
                           std::to_string(e.v) + ") with " +
                           std::to_string(node_count) + " nodes");
    }
    if (e.u == e.v) {
      throw GraphError("self-loop", "node " + std::to_string(e.u));
    }
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Graph g;
  g.node_count_ = node_count;
  g.edges_ = std::move(edges);
  g.features_ = std::move(features);
  g.label_ = label;

  std::vector<std::size_t> degree(node_count, 0);
  for (const auto& e : g.edges_) {
    ++degree[e.u];
    ++degree[e.v];
  }
  g.offsets_.assign(node_count + 1, 0);
  for (std::size_t i = 0; i < node_count; ++i) {
    g.offsets_[i + 1] = g.offsets_[i] + degree[i];
  }
  g.neighbor_data_.resize(g.offsets_[node_count]);
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& e : g.edges_) {
    g.neighbor_data_[cursor[e.u]++] = e.v;
    g.neighbor_data_[cursor[e.v]++] = e.u;
  }
  for (std::size_t i = 0; i < node_count; ++i) {
    std::sort(g.neighbor_data_.begin() + g.offsets_[i],
              g.neighbor_data_.begin() + g.offsets_[i + 1]);
  }
  return g;
}

Graph Graph::build(std::size_t node_count, std::vector<Edge> edges,
                   const std::vector<std::vector<double>>& features,
                   std::optional<int> label) {
  DenseMatrix m;
  try {
    m = DenseMatrix::from_rows(features);
  } catch (const std::invalid_argument&) {
    throw GraphError("feature-width", "feature rows differ in length");
  }
  if (features.empty()) m = DenseMatrix(0, 0);
  return build(node_count, std::move(edges), std::move(m), label);
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  if (a >= node_count_ || b >= node_count_) return false;
  auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

Graph Graph::with_label(std::optional<int> label) const {
  Graph g = *this;
  if (label && *label < 0) {
    throw GraphError("negative-label", std::to_string(*label));
  }
  g.label_ = label;
  return g;
}

NodeSubset NodeSubset::of(std::size_t parent_node_count,
                          std::vector<NodeId> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  if (!indices.empty() && indices.back() >= parent_node_count) {
    throw std::out_of_range("node index " + std::to_string(indices.back()) +
                            " out of range for " +
                            std::to_string(parent_node_count) + " nodes");
  }
  NodeSubset s;
  s.indices_ = std::move(indices);
  return s;
}

NodeSubset NodeSubset::all(std::size_t parent_node_count) {
  NodeSubset s;
  s.indices_.resize(parent_node_count);
  for (std::size_t i = 0; i < parent_node_count; ++i) s.indices_[i] = i;
  return s;
}

bool NodeSubset::contains(NodeId i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

NodeSubset NodeSubset::complement(std::size_t parent_node_count) const {
  NodeSubset s;
  std::size_t j = 0;
  for (NodeId i = 0; i < parent_node_count; ++i) {
    if (j < indices_.size() && indices_[j] == i) {
      ++j;
    } else {
      s.indices_.push_back(i);
    }
  }
  return s;
}

NodeSubset NodeSubset::intersect(const NodeSubset& other) const {
  NodeSubset s;
  std::set_intersection(indices_.begin(), indices_.end(),
                        other.indices_.begin(), other.indices_.end(),
                        std::back_inserter(s.indices_));
  return s;
}

Graph induced_subgraph(const Graph& g, const NodeSubset& nodes) {
  if (nodes.empty()) {
    throw std::invalid_argument("induced_subgraph: empty node subset");
  }
  const auto& idx = nodes.indices();
  if (idx.back() >= g.node_count()) {
    throw std::out_of_range("induced_subgraph: subset not valid for graph");
  }
  constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> remap(g.node_count(), kAbsent);
  for (std::size_t k = 0; k < idx.size(); ++k) remap[idx[k]] = k;

  std::vector<Edge> edges;
  for (NodeId old_u : idx) {
    for (NodeId old_v : g.neighbors(old_u)) {
      if (old_v > old_u && remap[old_v] != kAbsent) {
        edges.push_back({remap[old_u], remap[old_v]});
      }
    }
  }
  DenseMatrix features(idx.size(), g.feature_dim());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    auto src = g.feature_row(idx[k]);
    std::copy(src.begin(), src.end(), features.row(k).begin());
  }
  return Graph::build(idx.size(), std::move(edges), std::move(features),
                      g.label());
}

AdjacencyMatrix adjacency(const Graph& g) {
  AdjacencyMatrix a(g.node_count(), g.node_count());
  for (const auto& e : g.edges()) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  return a;
}

double edge_density(const Graph& g) {
  auto n = static_cast<double>(g.node_count());
  if (g.node_count() < 2) return 0.0;
  return 2.0 * static_cast<double>(g.edge_count()) / (n * (n - 1.0));
}

}  // namespace gshield
