#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"

#include "gshield/graph.hpp"
#include "gshield/matrix.hpp"
#include "gshield/predictor.hpp"

namespace gshield {

/// Permutation-invariant graph summary of length 2d + 4:
/// per-dimension feature mean, per-dimension feature max, mean degree,
/// max degree, node count, edge density. Empty graphs map to zeros.
std::vector<double> graph_readout(const Graph& g);

struct ReadoutTrainingOptions {
  double learning_rate = 0.5;
  std::size_t epochs = 500;
  double l2 = 1e-3;
};

/// Multinomial logistic regression over standardized graph readouts.
class ReadoutClassifier final : public Predictor {
 public:
  ReadoutClassifier(std::size_t feature_dim, DenseMatrix weights,
                    std::vector<double> bias, std::vector<double> input_mean,
                    std::vector<double> input_scale);

  int predict(const Graph& g) const override;
  int num_classes() const override { return static_cast<int>(bias_.size()); }

  std::vector<double> logits(const Graph& g) const;

  std::size_t feature_dim() const { return feature_dim_; }
  const DenseMatrix& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

  double training_accuracy() const { return training_accuracy_; }
  void set_training_accuracy(double a) { training_accuracy_ = a; }

  nlohmann::json to_json() const;
  static ReadoutClassifier from_json(const nlohmann::json& doc);
  void save(const std::filesystem::path& path) const;
  static ReadoutClassifier load(const std::filesystem::path& path);

 private:
  std::size_t feature_dim_;
  DenseMatrix weights_;
  std::vector<double> bias_;
  std::vector<double> input_mean_;
  std::vector<double> input_scale_;
  double training_accuracy_ = 0.0;
};

/// Full-batch gradient descent on cross-entropy + L2 from zero weights, so
/// the fit is a deterministic function of the data. Requires every graph
/// to be labeled and at least 2 classes present (std::invalid_argument).
/// The seed is recorded for provenance only.
ReadoutClassifier train_readout(const std::vector<Graph>& train,
                                const ReadoutTrainingOptions& options,
                                std::uint64_t seed);

}  // namespace gshield
