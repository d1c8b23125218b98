#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gshield/graph.hpp"
#include "gshield/predictor.hpp"

namespace gshield {

/// Subgraph sampling strategy: uniform node sampling (R), one node per
/// spectral cluster (T), or T plus feature-dimension masking (TF).
enum class Strategy { kRandom, kTopology, kTopologyFeature };

std::string_view to_string(Strategy s);
/// Accepts "R", "T", "TF" (case-insensitive). Throws std::invalid_argument.
Strategy parse_strategy(std::string_view text);

/// Which anomaly sets the filter removes.
enum class FilterMode {
  /// Nodes flagged by both topology and feature clustering.
  kOverlap,
  /// Smaller spectral cluster only.
  kTopologyOnly,
  /// Smaller mixture cluster only.
  kFeatureOnly,
};

std::string_view to_string(FilterMode m);
FilterMode parse_filter_mode(std::string_view text);

struct DefenseConfig {
  Strategy strategy = Strategy::kTopologyFeature;
  /// N: number of subgraphs, and the cluster-size divisor for T/TF.
  std::size_t subgraph_count = 5;
  /// p: node sampling rate for R.
  double sample_rate = 0.2;
  /// r: fraction of feature dimensions kept by TF.
  double feature_fraction = 0.8;
  bool filtering_enabled = true;
  FilterMode filter_mode = FilterMode::kOverlap;
  /// Graphs smaller than this pass through the filter untouched.
  std::size_t min_filter_size = 6;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing fields keep their defaults; unknown fields are rejected.
  static DefenseConfig from_json(const nlohmann::json& doc);
};

class DefenseError : public std::runtime_error {
 public:
  DefenseError(const std::string& what, std::optional<std::size_t> index)
      : std::runtime_error(what), subgraph_index_(index) {}
  /// Index of the subgraph whose query failed, if any.
  std::optional<std::size_t> subgraph_index() const { return subgraph_index_; }

 private:
  std::optional<std::size_t> subgraph_index_;
};

// ---------------------------------------------------------------------------
// Anomaly filtering
// ---------------------------------------------------------------------------

struct FilterReport {
  NodeSubset topology_anomalous;
  NodeSubset feature_anomalous;
  NodeSubset removed;
  /// Original indices of the nodes kept, i.e. the complement of removed.
  NodeSubset kept;
  Graph filtered_graph;
};

/// Removes nodes that are in the smaller cluster of both a 2-way spectral
/// clustering and a 2-component mixture clustering of the features. The
/// removal is cancelled when it would take ceil(n/2) nodes or more.
FilterReport filter_graph(const Graph& g, const DefenseConfig& cfg);

// ---------------------------------------------------------------------------
// Subgraph sampling
// ---------------------------------------------------------------------------

struct SampledSubgraph {
  Graph graph;
  /// Indices into the graph that was sampled.
  NodeSubset nodes;
  /// Feature dimensions kept (TF only; empty otherwise).
  std::vector<std::size_t> retained_dims;
};

struct SubgraphBatch {
  std::vector<SampledSubgraph> entries;
  /// Clusters requested for T/TF; 0 for R.
  std::size_t clusters = 0;
};

/// max(1, floor(p * n)) nodes drawn uniformly without replacement from the
/// stream (seed, draw_index).
SampledSubgraph sample_random(const Graph& g, const DefenseConfig& cfg,
                              std::size_t draw_index);

/// Clusters g once into max(1, floor(n / N)) spectral clusters, then draws
/// one node per non-empty cluster for each of the N subgraphs.
SubgraphBatch sample_topology(const Graph& g, const DefenseConfig& cfg);

/// sample_topology, then zeroes all but ceil(r * d) uniformly chosen
/// feature dimensions per subgraph.
SubgraphBatch sample_topology_feature(const Graph& g, const DefenseConfig& cfg);

/// Dispatches on cfg.strategy.
SubgraphBatch sample_subgraphs(const Graph& g, const DefenseConfig& cfg);

/// Copy of g whose features outside `retained` are zero.
Graph mask_features(const Graph& g, std::span<const std::size_t> retained);

// ---------------------------------------------------------------------------
// Robust prediction
// ---------------------------------------------------------------------------

struct VoteTally {
  std::vector<std::size_t> counts;
  /// argmax of counts, smallest index on ties.
  int winner = 0;
};

/// Throws std::invalid_argument for an empty list or a label outside
/// [0, num_classes).
VoteTally majority_vote(std::span<const int> labels, int num_classes);

enum class QueryDispatch { kSequential, kConcurrent };

struct DefenseResult {
  int label = 0;
  VoteTally tally;
  FilterReport filter;
  std::size_t query_count = 0;
  std::vector<int> subgraph_labels;
  std::vector<std::size_t> subgraph_sizes;
};

/// Full pipeline: filter, sample N subgraphs, query the predictor exactly
/// once per subgraph, majority vote. A failing query raises DefenseError
/// carrying the subgraph index; no partial vote is returned. Results are
/// combined in subgraph order, so both dispatch modes agree.
DefenseResult defend(const Graph& g, const Predictor& predictor,
                     const DefenseConfig& cfg,
                     QueryDispatch dispatch = QueryDispatch::kSequential);

}  // namespace gshield
