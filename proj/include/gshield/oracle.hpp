#pragma once

#include <cstddef>
#include <vector>

#include "json.hpp"

#include "gshield/graph.hpp"
#include "gshield/matrix.hpp"
#include "gshield/predictor.hpp"

namespace gshield {

/// Ground-truth backdoored classifier with an exactly known trigger rule.
struct BackdoorOracleSpec {
  /// C x d class centroids in mean-feature space; the clean rule picks the
  /// nearest one (smallest index on ties).
  DenseMatrix centroids;
  /// Trigger feature signature (length d).
  std::vector<double> signature;
  /// The trigger fires when at least this many nodes match the signature...
  std::size_t min_trigger_nodes = 3;
  /// ...within this infinity-norm tolerance...
  double tolerance = 0.5;
  /// ...and the matching nodes induce a subgraph at least this dense.
  double min_density = 0.9;
  int target_label = 0;

  /// Throws std::invalid_argument when an invariant fails.
  void validate() const;

  nlohmann::json to_json() const;
  static BackdoorOracleSpec from_json(const nlohmann::json& doc);
};

class BackdoorOracle final : public Predictor {
 public:
  explicit BackdoorOracle(BackdoorOracleSpec spec);

  int predict(const Graph& g) const override;
  int num_classes() const override {
    return static_cast<int>(spec_.centroids.rows());
  }

  int clean_label(const Graph& g) const;
  bool trigger_present(const Graph& g) const;
  /// Nodes whose features match the signature within tolerance.
  std::vector<NodeId> signature_matches(const Graph& g) const;

  const BackdoorOracleSpec& spec() const { return spec_; }

 private:
  BackdoorOracleSpec spec_;
};

/// Per-class mean of the graphs' mean feature vectors (C x d), where C is
/// one more than the largest label. Classes without graphs keep a zero row.
DenseMatrix class_centroids(const std::vector<Graph>& graphs);

}  // namespace gshield
