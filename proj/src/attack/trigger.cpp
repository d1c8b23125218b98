#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

#include "gshield/attack.hpp"
#include "gshield/rng.hpp"

namespace gshield {

std::string_view to_string(TriggerPattern p) {
  switch (p) {
    case TriggerPattern::kErdosRenyi: return "erdos_renyi";
    case TriggerPattern::kSmallWorld: return "small_world";
    case TriggerPattern::kPreferentialAttachment: return "preferential_attachment";
    case TriggerPattern::kComplete: return "complete";
  }
  return "?";
}

TriggerPattern parse_trigger_pattern(std::string_view text) {
  std::string t(text);
  for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "erdos_renyi" || t == "er") return TriggerPattern::kErdosRenyi;
  if (t == "small_world" || t == "sw") return TriggerPattern::kSmallWorld;
  if (t == "preferential_attachment" || t == "pa") return TriggerPattern::kPreferentialAttachment;
  if (t == "complete") return TriggerPattern::kComplete;
  throw std::invalid_argument("unknown trigger pattern '" + std::string(text) + "'");
}

void TriggerSpec::validate(std::size_t feature_dim) const {
  if (size < 2) throw std::invalid_argument("trigger size must be >= 2");
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
    }
  };
  prob(edge_probability, "edge_probability");
  prob(rewire_probability, "rewire_probability");
  if (pattern == TriggerPattern::kSmallWorld && (ring_degree < 2 || ring_degree >= size)) {
    throw std::invalid_argument("ring_degree must be in [2, size)");
  }
  if (pattern == TriggerPattern::kPreferentialAttachment &&
      (attachment_count < 1 || attachment_count >= size)) {
    throw std::invalid_argument("attachment_count must be in [1, size)");
  }
  if (target_label < 0) throw std::invalid_argument("target_label must be >= 0");
  if (feature_dim != 0 && signature.size() != feature_dim) {
    throw std::invalid_argument("signature has dimension " + std::to_string(signature.size()) +
                                ", dataset has " + std::to_string(feature_dim));
  }
}

nlohmann::json TriggerSpec::to_json() const {
  return {{"pattern", to_string(pattern)},
          {"size", size},
          {"edge_probability", edge_probability},
          {"ring_degree", ring_degree},
          {"rewire_probability", rewire_probability},
          {"attachment_count", attachment_count},
          {"signature", signature},
          {"target_label", target_label},
          {"seed", seed}};
}

TriggerSpec TriggerSpec::from_json(const nlohmann::json& doc) {
  TriggerSpec s;
  s.pattern = parse_trigger_pattern(doc.value("pattern", std::string("complete")));
  s.size = doc.value("size", s.size);
  s.edge_probability = doc.value("edge_probability", s.edge_probability);
  s.ring_degree = doc.value("ring_degree", s.ring_degree);
  s.rewire_probability = doc.value("rewire_probability", s.rewire_probability);
  s.attachment_count = doc.value("attachment_count", s.attachment_count);
  s.signature = doc.value("signature", s.signature);
  s.target_label = doc.value("target_label", s.target_label);
  s.seed = doc.value("seed", s.seed);
  return s;
}

namespace {

using EdgeSet = std::set<std::pair<NodeId, NodeId>>;

void add(EdgeSet& es, NodeId a, NodeId b) { es.insert({std::min(a, b), std::max(a, b)}); }
bool has(const EdgeSet& es, NodeId a, NodeId b) {
  return es.count({std::min(a, b), std::max(a, b)}) > 0;
}

EdgeSet small_world(const TriggerSpec& spec, Rng& rng) {
  const std::size_t n = spec.size;
  const std::size_t half = spec.ring_degree / 2;
  EdgeSet es;
  for (std::size_t j = 1; j <= half; ++j) {
    for (NodeId u = 0; u < n; ++u) add(es, u, (u + j) % n);
  }
  // Rewire each lattice edge (u, u+j) to a uniformly chosen new endpoint.
  for (std::size_t j = 1; j <= half; ++j) {
    for (NodeId u = 0; u < n; ++u) {
      const NodeId v = (u + j) % n;
      if (!rng.bernoulli(spec.rewire_probability)) continue;
      std::size_t degree_u = 0;
      for (const auto& e : es) degree_u += (e.first == u || e.second == u);
      if (degree_u >= n - 1) continue;
      NodeId w = rng.uniform_below(n);
      while (w == u || has(es, u, w)) w = rng.uniform_below(n);
      es.erase({std::min(u, v), std::max(u, v)});
      add(es, u, w);
    }
  }
  return es;
}

EdgeSet preferential_attachment(const TriggerSpec& spec, Rng& rng) {
  const std::size_t n = spec.size;
  const std::size_t m = spec.attachment_count;
  EdgeSet es;
  std::vector<NodeId> targets(m);
  for (std::size_t i = 0; i < m; ++i) targets[i] = i;
  std::vector<NodeId> repeated;
  for (NodeId source = m; source < n; ++source) {
    for (NodeId t : targets) add(es, source, t);
    repeated.insert(repeated.end(), targets.begin(), targets.end());
    repeated.insert(repeated.end(), m, source);
    std::set<NodeId> chosen;
    while (chosen.size() < m) chosen.insert(repeated[rng.uniform_below(repeated.size())]);
    targets.assign(chosen.begin(), chosen.end());
  }
  return es;
}

}  // namespace

Graph generate_trigger(const TriggerSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t t = spec.size;
  Rng rng(derive_seed(seed, stream::kTrigger));
  EdgeSet es;
  switch (spec.pattern) {
    case TriggerPattern::kComplete:
      for (NodeId a = 0; a < t; ++a) {
        for (NodeId b = a + 1; b < t; ++b) add(es, a, b);
      }
      break;
    case TriggerPattern::kErdosRenyi:
      for (NodeId a = 0; a < t; ++a) {
        for (NodeId b = a + 1; b < t; ++b) {
          if (rng.bernoulli(spec.edge_probability)) add(es, a, b);
        }
      }
      break;
    case TriggerPattern::kSmallWorld:
      es = small_world(spec, rng);
      break;
    case TriggerPattern::kPreferentialAttachment:
      es = preferential_attachment(spec, rng);
      break;
  }
  std::vector<Edge> edges;
  edges.reserve(es.size());
  for (const auto& [a, b] : es) edges.push_back({a, b});
  DenseMatrix features(t, spec.signature.size());
  for (std::size_t i = 0; i < t; ++i) {
    std::copy(spec.signature.begin(), spec.signature.end(), features.row(i).begin());
  }
  return Graph::build(t, std::move(edges), std::move(features));
}

std::vector<NodeId> choose_hosts(std::size_t node_count, std::size_t trigger_size,
                                 std::uint64_t seed) {
  Rng rng(derive_seed(seed, stream::kInject));
  return rng.sample_without_replacement(node_count, trigger_size);
}

Graph inject_trigger_at(const Graph& g, const Graph& trigger,
                        std::span<const NodeId> hosts) {
  const std::size_t t = trigger.node_count();
  if (g.node_count() < t) {
    throw std::invalid_argument("inject_trigger: graph has " + std::to_string(g.node_count()) +
                                " nodes, trigger has " + std::to_string(t));
  }
  if (g.feature_dim() != trigger.feature_dim()) {
    throw std::invalid_argument("inject_trigger: feature dimensions differ");
  }
  if (hosts.size() != t) throw std::invalid_argument("inject_trigger: need one host per trigger node");
  std::vector<bool> is_host(g.node_count(), false);
  for (NodeId h : hosts) {
    if (h >= g.node_count() || is_host[h]) {
      throw std::invalid_argument("inject_trigger: invalid or repeated host");
    }
    is_host[h] = true;
  }
  std::vector<Edge> edges;
  edges.reserve(g.edge_count() + trigger.edge_count());
  for (const auto& e : g.edges()) {
    if (!(is_host[e.u] && is_host[e.v])) edges.push_back(e);
  }
  for (const auto& e : trigger.edges()) edges.push_back({hosts[e.u], hosts[e.v]});
  DenseMatrix features = g.features();
  for (std::size_t i = 0; i < t; ++i) {
    auto src = trigger.feature_row(i);
    std::copy(src.begin(), src.end(), features.row(hosts[i]).begin());
  }
  return Graph::build(g.node_count(), std::move(edges), std::move(features), g.label());
}

Graph inject_trigger(const Graph& g, const Graph& trigger, std::uint64_t seed) {
  if (g.node_count() < trigger.node_count()) {
    throw std::invalid_argument("inject_trigger: graph smaller than trigger");
  }
  auto hosts = choose_hosts(g.node_count(), trigger.node_count(), seed);
  return inject_trigger_at(g, trigger, hosts);
}

}  // namespace gshield
