#include <algorithm>

#include "gshield/clustering.hpp"
#include "gshield/defense.hpp"
#include "gshield/graph_io.hpp"
#include "gshield/rng.hpp"

namespace gshield {

Graph mask_features(const Graph& g, std::span<const std::size_t> retained) {
  const std::size_t d = g.feature_dim();
  std::vector<bool> keep(d, false);
  for (auto j : retained) {
    if (j >= d) throw std::out_of_range("mask_features: dimension out of range");
    keep[j] = true;
  }
  DenseMatrix features = g.features();
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!keep[j]) features(i, j) = 0.0;
    }
  }
  return Graph::build(g.node_count(), g.edges(), std::move(features), g.label());
}

SampledSubgraph sample_random(const Graph& g, const DefenseConfig& cfg,
                              std::size_t draw_index) {
  const std::size_t n = g.node_count();
  if (n == 0) throw std::invalid_argument("sample_random: empty graph");
  const std::size_t size =
      std::clamp<std::size_t>(robust_floor(cfg.sample_rate * static_cast<double>(n)), 1, n);
  Rng rng(derive_seed(cfg.seed, stream::kSampleRandom, draw_index));
  SampledSubgraph s;
  s.nodes = NodeSubset::of(n, rng.sample_without_replacement(n, size));
  s.graph = induced_subgraph(g, s.nodes);
  return s;
}

SubgraphBatch sample_topology(const Graph& g, const DefenseConfig& cfg) {
  const std::size_t n = g.node_count();
  if (n == 0) throw std::invalid_argument("sample_topology: empty graph");
  const std::size_t k = std::max<std::size_t>(1, n / cfg.subgraph_count);
  ClusterAssignment clusters =
      spectral_cluster(g, k, derive_seed(cfg.seed, stream::kTopologyClusters));
  auto members = clusters.members();

  SubgraphBatch batch;
  batch.clusters = k;
  batch.entries.reserve(cfg.subgraph_count);
  for (std::size_t i = 0; i < cfg.subgraph_count; ++i) {
    Rng rng(derive_seed(cfg.seed, stream::kTopologyDraw, i));
    std::vector<NodeId> picked;
    picked.reserve(members.size());
    for (const auto& cluster : members) {
      if (cluster.empty()) continue;
      picked.push_back(cluster[rng.uniform_below(cluster.size())]);
    }
    SampledSubgraph s;
    s.nodes = NodeSubset::of(n, std::move(picked));
    s.graph = induced_subgraph(g, s.nodes);
    batch.entries.push_back(std::move(s));
  }
  return batch;
}

SubgraphBatch sample_topology_feature(const Graph& g, const DefenseConfig& cfg) {
  if (g.feature_dim() == 0) {
    throw std::invalid_argument("sample_topology_feature: graph has no features");
  }
  SubgraphBatch batch = sample_topology(g, cfg);
  const std::size_t d = g.feature_dim();
  const std::size_t keep = std::clamp<std::size_t>(
      robust_ceil(cfg.feature_fraction * static_cast<double>(d)), 1, d);
  for (std::size_t i = 0; i < batch.entries.size(); ++i) {
    Rng rng(derive_seed(cfg.seed, stream::kFeatureMask, i));
    auto dims = rng.sample_without_replacement(d, keep);
    std::sort(dims.begin(), dims.end());
    auto& entry = batch.entries[i];
    entry.graph = mask_features(entry.graph, dims);
    entry.retained_dims = std::move(dims);
  }
  return batch;
}

SubgraphBatch sample_subgraphs(const Graph& g, const DefenseConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::kRandom: {
      SubgraphBatch batch;
      batch.entries.reserve(cfg.subgraph_count);
      for (std::size_t i = 0; i < cfg.subgraph_count; ++i) {
        batch.entries.push_back(sample_random(g, cfg, i));
      }
      return batch;
    }
    case Strategy::kTopology:
      return sample_topology(g, cfg);
    case Strategy::kTopologyFeature:
      return sample_topology_feature(g, cfg);
  }
  throw std::logic_error("unhandled strategy");
}

}  // namespace gshield
