#include "gshield/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace gshield {

void BackdoorOracleSpec::validate() const {
  if (centroids.rows() < 2) {
    throw std::invalid_argument("oracle: need at least 2 class centroids");
  }
  if (signature.size() != centroids.cols()) {
    throw std::invalid_argument("oracle: signature dimension mismatch");
  }
  if (min_trigger_nodes < 3) {
    throw std::invalid_argument("oracle: min_trigger_nodes must be >= 3");
  }
  if (!(tolerance > 0.0)) throw std::invalid_argument("oracle: tolerance must be > 0");
  if (!(min_density > 0.0 && min_density <= 1.0)) {
    throw std::invalid_argument("oracle: min_density must be in (0, 1]");
  }
  if (target_label < 0 || static_cast<std::size_t>(target_label) >= centroids.rows()) {
    throw std::invalid_argument("oracle: target_label out of range");
  }
}

nlohmann::json BackdoorOracleSpec::to_json() const {
  return {{"kind", "backdoor-oracle"},
          {"centroids", centroids.to_rows()},
          {"signature", signature},
          {"min_trigger_nodes", min_trigger_nodes},
          {"tolerance", tolerance},
          {"min_density", min_density},
          {"target_label", target_label}};
}

BackdoorOracleSpec BackdoorOracleSpec::from_json(const nlohmann::json& doc) {
  BackdoorOracleSpec s;
  s.centroids = DenseMatrix::from_rows(
      doc.at("centroids").get<std::vector<std::vector<double>>>());
  s.signature = doc.at("signature").get<std::vector<double>>();
  s.min_trigger_nodes = doc.value("min_trigger_nodes", s.min_trigger_nodes);
  s.tolerance = doc.value("tolerance", s.tolerance);
  s.min_density = doc.value("min_density", s.min_density);
  s.target_label = doc.value("target_label", s.target_label);
  return s;
}

BackdoorOracle::BackdoorOracle(BackdoorOracleSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

std::vector<NodeId> BackdoorOracle::signature_matches(const Graph& g) const {
  std::vector<NodeId> out;
  if (g.feature_dim() != spec_.signature.size()) return out;
  for (NodeId i = 0; i < g.node_count(); ++i) {
    auto row = g.feature_row(i);
    bool match = true;
    for (std::size_t j = 0; j < row.size() && match; ++j) {
      match = std::abs(row[j] - spec_.signature[j]) <= spec_.tolerance;
    }
    if (match) out.push_back(i);
  }
  return out;
}

bool BackdoorOracle::trigger_present(const Graph& g) const {
  auto matches = signature_matches(g);
  if (matches.size() < spec_.min_trigger_nodes) return false;
  std::size_t internal = 0;
  for (std::size_t a = 0; a < matches.size(); ++a) {
    for (std::size_t b = a + 1; b < matches.size(); ++b) {
      internal += g.has_edge(matches[a], matches[b]);
    }
  }
  const auto q = static_cast<double>(matches.size());
  return 2.0 * static_cast<double>(internal) / (q * (q - 1.0)) >= spec_.min_density;
}

int BackdoorOracle::clean_label(const Graph& g) const {
  const std::size_t d = spec_.centroids.cols();
  if (g.feature_dim() != d) {
    throw PredictorError("oracle expects feature dimension " + std::to_string(d));
  }
  std::vector<double> mean(d, 0.0);
  for (NodeId i = 0; i < g.node_count(); ++i) {
    auto row = g.feature_row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (double& m : mean) m /= static_cast<double>(g.node_count());
  int best = 0;
  double best_d = 0.0;
  for (std::size_t c = 0; c < spec_.centroids.rows(); ++c) {
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = mean[j] - spec_.centroids(c, j);
      dist += diff * diff;
    }
    if (c == 0 || dist < best_d) {
      best_d = dist;
      best = static_cast<int>(c);
    }
  }
  return best;
}

int BackdoorOracle::predict(const Graph& g) const {
  if (g.node_count() == 0) throw PredictorError("empty graph");
  const int clean = clean_label(g);
  return trigger_present(g) ? spec_.target_label : clean;
}

DenseMatrix class_centroids(const std::vector<Graph>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("class_centroids: no graphs");
  const std::size_t d = graphs.front().feature_dim();
  int max_label = 0;
  for (const auto& g : graphs) {
    if (!g.label()) throw std::invalid_argument("class_centroids: unlabeled graph");
    max_label = std::max(max_label, *g.label());
  }
  const auto c_count = static_cast<std::size_t>(max_label) + 1;
  DenseMatrix sums(c_count, d, 0.0);
  std::vector<std::size_t> counts(c_count, 0);
  for (const auto& g : graphs) {
    if (g.node_count() == 0) continue;
    const auto c = static_cast<std::size_t>(*g.label());
    for (NodeId i = 0; i < g.node_count(); ++i) {
      auto row = g.feature_row(i);
      for (std::size_t j = 0; j < d; ++j) {
        sums(c, j) += row[j] / static_cast<double>(g.node_count());
      }
    }
    ++counts[c];
  }
  for (std::size_t c = 0; c < c_count; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) sums(c, j) /= static_cast<double>(counts[c]);
  }
  return sums;
}

}  // namespace gshield
