#include <numeric>
#include <stdexcept>

#include "gshield/attack.hpp"
#include "gshield/rng.hpp"

namespace gshield {

void SyntheticSpec::validate() const {
  if (graph_count < 1) throw std::invalid_argument("graph_count must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (min_nodes < 1 || min_nodes > max_nodes) {
    throw std::invalid_argument("need 1 <= min_nodes <= max_nodes");
  }
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) {
    throw std::invalid_argument("edge_probability must be in [0, 1]");
  }
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (!(feature_std >= 0.0)) throw std::invalid_argument("feature_std must be >= 0");
}

nlohmann::json SyntheticSpec::to_json() const {
  return {{"graph_count", graph_count},   {"num_classes", num_classes},
          {"min_nodes", min_nodes},       {"max_nodes", max_nodes},
          {"edge_probability", edge_probability},
          {"feature_dim", feature_dim},   {"class_mean_step", class_mean_step},
          {"feature_std", feature_std},   {"connect_components", connect_components},
          {"seed", seed}};
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& doc) {
  SyntheticSpec s;
  s.graph_count = doc.value("graph_count", s.graph_count);
  s.num_classes = doc.value("num_classes", s.num_classes);
  s.min_nodes = doc.value("min_nodes", s.min_nodes);
  s.max_nodes = doc.value("max_nodes", s.max_nodes);
  s.edge_probability = doc.value("edge_probability", s.edge_probability);
  s.feature_dim = doc.value("feature_dim", s.feature_dim);
  s.class_mean_step = doc.value("class_mean_step", s.class_mean_step);
  s.feature_std = doc.value("feature_std", s.feature_std);
  s.connect_components = doc.value("connect_components", s.connect_components);
  s.seed = doc.value("seed", s.seed);
  return s;
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

std::vector<Graph> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<Graph> graphs;
  graphs.reserve(spec.graph_count);
  for (std::size_t gi = 0; gi < spec.graph_count; ++gi) {
    Rng rng(derive_seed(spec.seed, stream::kDataset, gi));
    const int label = static_cast<int>(gi % spec.num_classes);
    const std::size_t n =
        spec.min_nodes + rng.uniform_below(spec.max_nodes - spec.min_nodes + 1);

    std::vector<Edge> edges;
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (NodeId a = 0; a < n; ++a) {
      for (NodeId b = a + 1; b < n; ++b) {
        if (rng.bernoulli(spec.edge_probability)) {
          edges.push_back({a, b});
          parent[find_root(parent, a)] = find_root(parent, b);
        }
      }
    }
    if (spec.connect_components) {
      // Chain each component to a random node of the component of node 0.
      for (NodeId v = 1; v < n; ++v) {
        if (find_root(parent, v) == find_root(parent, 0)) continue;
        NodeId anchor = rng.uniform_below(v);
        edges.push_back({anchor, v});
        parent[find_root(parent, v)] = find_root(parent, anchor);
      }
    }

    DenseMatrix features(n, spec.feature_dim);
    const double mean = spec.class_mean_step * label;
    for (double& x : features.data()) x = rng.normal(mean, spec.feature_std);
    graphs.push_back(Graph::build(n, std::move(edges), std::move(features), label));
  }
  return graphs;
}

}  // namespace gshield
