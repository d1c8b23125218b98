#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gshield/graph.hpp"

namespace gshield {

enum class TriggerPattern { kErdosRenyi, kSmallWorld, kPreferentialAttachment, kComplete };

std::string_view to_string(TriggerPattern p);
/// "erdos_renyi", "small_world", "preferential_attachment", "complete".
TriggerPattern parse_trigger_pattern(std::string_view text);

/// Subgraph trigger: a small random-graph pattern whose nodes all carry
/// the same feature signature.
struct TriggerSpec {
  TriggerPattern pattern = TriggerPattern::kComplete;
  /// t, number of trigger nodes.
  std::size_t size = 5;
  /// Erdos-Renyi edge probability.
  double edge_probability = 0.8;
  /// Watts-Strogatz ring degree (neighbors per node before rewiring).
  std::size_t ring_degree = 2;
  double rewire_probability = 0.1;
  /// Barabasi-Albert edges per new node.
  std::size_t attachment_count = 2;
  std::vector<double> signature;
  int target_label = 0;
  /// Seed of the trigger topology shared by poisoning and the attack set.
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument. feature_dim == 0 skips the signature
  /// dimension check.
  void validate(std::size_t feature_dim = 0) const;

  nlohmann::json to_json() const;
  static TriggerSpec from_json(const nlohmann::json& doc);
};

/// t-node graph with the pattern's topology and every feature row equal to
/// the signature. Throws std::invalid_argument for unsatisfiable
/// parameters (e.g. ring_degree >= t).
Graph generate_trigger(const TriggerSpec& spec, std::uint64_t seed);

/// t host nodes drawn uniformly without replacement, in draw order.
std::vector<NodeId> choose_hosts(std::size_t node_count, std::size_t trigger_size,
                                 std::uint64_t seed);

/// Trigger node i replaces host hosts[i]: edges among hosts are deleted,
/// the trigger's edges are installed on them and their feature rows are
/// overwritten. Host-to-rest edges and the node count are preserved.
Graph inject_trigger_at(const Graph& g, const Graph& trigger,
                        std::span<const NodeId> hosts);

/// inject_trigger_at with hosts from choose_hosts(n, t, seed). Throws
/// std::invalid_argument when g is smaller than the trigger or the feature
/// dimensions differ.
Graph inject_trigger(const Graph& g, const Graph& trigger, std::uint64_t seed);

struct PoisonPlan {
  double poison_rate = 0.0;
  std::uint64_t seed = 0;
  /// Sorted indices of poisoned training graphs.
  std::vector<std::size_t> indices;
  std::vector<std::string> warnings;
};

struct PoisonedDataset {
  std::vector<Graph> graphs;
  PoisonPlan plan;
};

/// Injects the trigger into floor(rate * |train|) graphs, preferring graphs
/// not already labeled with the target, and relabels them to the target.
PoisonedDataset poison_dataset(const std::vector<Graph>& train,
                               const TriggerSpec& spec, double rate,
                               std::uint64_t seed);

struct AttackSet {
  /// Trigger-injected copies keeping their true labels.
  std::vector<Graph> graphs;
  /// Index of each source graph in the test list.
  std::vector<std::size_t> source_indices;
};

/// Injects the trigger into every test graph whose label is not the target.
AttackSet make_attack_testset(const std::vector<Graph>& test,
                              const TriggerSpec& spec, std::uint64_t seed);

/// Per-dimension feature mean + multiplier * std over all nodes.
std::vector<double> default_signature(const std::vector<Graph>& graphs,
                                      double std_multiplier = 3.0);

// ---------------------------------------------------------------------------
// Synthetic benchmark corpus
// ---------------------------------------------------------------------------

/// Class-conditional Erdos-Renyi graphs with Gaussian node features whose
/// mean is label * class_mean_step in every dimension.
struct SyntheticSpec {
  std::size_t graph_count = 300;
  std::size_t num_classes = 2;
  std::size_t min_nodes = 20;
  std::size_t max_nodes = 40;
  double edge_probability = 0.1;
  std::size_t feature_dim = 8;
  double class_mean_step = 5.0;
  double feature_std = 0.5;
  /// Link disconnected components with one edge each.
  bool connect_components = true;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticSpec from_json(const nlohmann::json& doc);
};

/// Graph i has label i mod num_classes.
std::vector<Graph> generate_synthetic(const SyntheticSpec& spec);

}  // namespace gshield
