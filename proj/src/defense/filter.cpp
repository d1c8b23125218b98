#include <algorithm>
#include <cctype>

#include "gshield/clustering.hpp"
#include "gshield/defense.hpp"
#include "gshield/graph_io.hpp"
#include "gshield/rng.hpp"

namespace gshield {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Members of the strictly smaller of two clusters; empty when the
/// clustering did not split or split evenly.
NodeSubset smaller_cluster(const ClusterAssignment& a, std::size_t n) {
  if (a.k_effective < 2) return {};
  auto members = a.members();
  if (members[0].size() == members[1].size()) return {};
  const auto& smaller = members[0].size() < members[1].size() ? members[0] : members[1];
  return NodeSubset::of(n, smaller);
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "R";
    case Strategy::kTopology: return "T";
    case Strategy::kTopologyFeature: return "TF";
  }
  return "?";
}

Strategy parse_strategy(std::string_view text) {
  auto t = lower(text);
  if (t == "r" || t == "random") return Strategy::kRandom;
  if (t == "t" || t == "topology") return Strategy::kTopology;
  if (t == "tf" || t == "topology_feature") return Strategy::kTopologyFeature;
  throw std::invalid_argument("unknown strategy '" + std::string(text) + "'");
}

std::string_view to_string(FilterMode m) {
  switch (m) {
    case FilterMode::kOverlap: return "overlap";
    case FilterMode::kTopologyOnly: return "topology";
    case FilterMode::kFeatureOnly: return "feature";
  }
  return "?";
}

FilterMode parse_filter_mode(std::string_view text) {
  auto t = lower(text);
  if (t == "overlap") return FilterMode::kOverlap;
  if (t == "topology") return FilterMode::kTopologyOnly;
  if (t == "feature") return FilterMode::kFeatureOnly;
  throw std::invalid_argument("unknown filter mode '" + std::string(text) + "'");
}

void DefenseConfig::validate() const {
  if (subgraph_count < 1) throw std::invalid_argument("subgraph_count must be >= 1");
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw std::invalid_argument("sample_rate must be in (0, 1]");
  }
  if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) {
    throw std::invalid_argument("feature_fraction must be in (0, 1]");
  }
  if (min_filter_size < 1) throw std::invalid_argument("min_filter_size must be >= 1");
}

nlohmann::json DefenseConfig::to_json() const {
  return {{"strategy", to_string(strategy)},
          {"subgraph_count", subgraph_count},
          {"sample_rate", sample_rate},
          {"feature_fraction", feature_fraction},
          {"filtering_enabled", filtering_enabled},
          {"filter_mode", to_string(filter_mode)},
          {"min_filter_size", min_filter_size},
          {"seed", seed}};
}

DefenseConfig DefenseConfig::from_json(const nlohmann::json& doc) {
  DefenseConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "strategy") cfg.strategy = parse_strategy(value.get<std::string>());
    else if (key == "subgraph_count") cfg.subgraph_count = value.get<std::size_t>();
    else if (key == "sample_rate") cfg.sample_rate = value.get<double>();
    else if (key == "feature_fraction") cfg.feature_fraction = value.get<double>();
    else if (key == "filtering_enabled") cfg.filtering_enabled = value.get<bool>();
    else if (key == "filter_mode") cfg.filter_mode = parse_filter_mode(value.get<std::string>());
    else if (key == "min_filter_size") cfg.min_filter_size = value.get<std::size_t>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else throw std::invalid_argument("unknown defense field '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

FilterReport filter_graph(const Graph& g, const DefenseConfig& cfg) {
  const std::size_t n = g.node_count();
  FilterReport report;
  auto pass_through = [&] {
    report.removed = {};
    report.kept = NodeSubset::all(n);
    report.filtered_graph = g;
    return report;
  };
  if (!cfg.filtering_enabled || n < cfg.min_filter_size || n < 2) {
    return pass_through();
  }

  if (cfg.filter_mode != FilterMode::kFeatureOnly) {
    auto topo = spectral_cluster(g, 2, derive_seed(cfg.seed, stream::kFilterTopology));
    report.topology_anomalous = smaller_cluster(topo, n);
  }
  if (cfg.filter_mode != FilterMode::kTopologyOnly) {
    auto feat = gmm_cluster(g.features(), derive_seed(cfg.seed, stream::kFilterFeature));
    report.feature_anomalous = smaller_cluster(feat, n);
  }

  NodeSubset candidate;
  switch (cfg.filter_mode) {
    case FilterMode::kOverlap:
      candidate = report.topology_anomalous.intersect(report.feature_anomalous);
      break;
    case FilterMode::kTopologyOnly:
      candidate = report.topology_anomalous;
      break;
    case FilterMode::kFeatureOnly:
      candidate = report.feature_anomalous;
      break;
  }
  // Anomalies are a minor fraction of the graph; refuse to cut its body.
  if (candidate.size() >= robust_ceil(static_cast<double>(n) / 2.0) ||
      candidate.size() >= n) {
    candidate = {};
  }
  report.removed = candidate;
  report.kept = candidate.complement(n);
  report.filtered_graph =
      candidate.empty() ? g : induced_subgraph(g, report.kept);
  return report;
}

}  // namespace gshield
