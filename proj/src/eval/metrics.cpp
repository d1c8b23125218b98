#include <stdexcept>

#include "gshield/eval.hpp"

namespace gshield {

double attack_success_rate(std::span<const int> labels, int target) {
  if (labels.empty()) throw std::invalid_argument("attack_success_rate: empty attack set");
  std::size_t hits = 0;
  for (int l : labels) hits += (l == target);
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.empty()) throw std::invalid_argument("accuracy: empty clean set");
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("accuracy: prediction and label counts differ");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += (predicted[i] == truth[i]);
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

double attack_success_rate(std::span<const GraphRecord> records, int target, bool defended) {
  std::vector<int> labels;
  for (const auto& r : records) {
    if (r.kind == RecordKind::kAttack) {
      labels.push_back(defended ? r.defended_label : r.undefended_label);
    }
  }
  return attack_success_rate(labels, target);
}

double accuracy(std::span<const GraphRecord> records, bool defended) {
  std::vector<int> predicted, truth;
  for (const auto& r : records) {
    if (r.kind == RecordKind::kClean) {
      predicted.push_back(defended ? r.defended_label : r.undefended_label);
      truth.push_back(r.true_label);
    }
  }
  return accuracy(predicted, truth);
}

}  // namespace gshield
