#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gshield/attack.hpp"
#include "gshield/graph_io.hpp"
#include "gshield/rng.hpp"

namespace gshield {

PoisonedDataset poison_dataset(const std::vector<Graph>& train,
                               const TriggerSpec& spec, double rate,
                               std::uint64_t seed) {
  if (train.empty()) throw std::invalid_argument("poison_dataset: empty training set");
  if (!(rate > 0.0 && rate < 1.0)) {
    throw std::invalid_argument("poison_dataset: rate must be in (0, 1)");
  }
  const std::size_t count = robust_floor(rate * static_cast<double>(train.size()));
  if (count < 1) throw std::invalid_argument("poison_dataset: rate * |train| < 1");
  spec.validate(train.front().feature_dim());

  std::vector<std::size_t> preferred, fallback;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (train[i].label() == spec.target_label ? fallback : preferred).push_back(i);
  }
  if (preferred.empty()) {
    throw std::invalid_argument("poison_dataset: every graph already has the target label");
  }
  Rng rng(derive_seed(seed, stream::kPoison));
  rng.shuffle(preferred);
  rng.shuffle(fallback);

  PoisonedDataset out;
  out.plan.poison_rate = rate;
  out.plan.seed = seed;
  out.plan.indices.assign(preferred.begin(),
                          preferred.begin() + std::min(count, preferred.size()));
  if (count > preferred.size()) {
    const std::size_t extra = count - preferred.size();
    out.plan.indices.insert(out.plan.indices.end(), fallback.begin(), fallback.begin() + extra);
    out.plan.warnings.push_back("only " + std::to_string(preferred.size()) +
                                " non-target graphs available; poisoned " +
                                std::to_string(extra) + " target-labeled graphs");
  }
  std::sort(out.plan.indices.begin(), out.plan.indices.end());

  const Graph trigger = generate_trigger(spec, spec.seed);
  out.graphs = train;
  for (std::size_t i : out.plan.indices) {
    if (train[i].node_count() < trigger.node_count()) {
      throw std::invalid_argument("poison_dataset: graph " + std::to_string(i) +
                                  " is smaller than the trigger");
    }
    out.graphs[i] = inject_trigger(train[i], trigger, derive_seed(seed, stream::kPoison, i + 1))
                        .with_label(spec.target_label);
  }
  return out;
}

AttackSet make_attack_testset(const std::vector<Graph>& test,
                              const TriggerSpec& spec, std::uint64_t seed) {
  AttackSet out;
  if (test.empty()) return out;
  spec.validate(test.front().feature_dim());
  const Graph trigger = generate_trigger(spec, spec.seed);
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].label() == spec.target_label) continue;
    out.graphs.push_back(inject_trigger(test[i], trigger, derive_seed(seed, stream::kAttackSet, i)));
    out.source_indices.push_back(i);
  }
  return out;
}

std::vector<double> default_signature(const std::vector<Graph>& graphs,
                                      double std_multiplier) {
  if (graphs.empty()) throw std::invalid_argument("default_signature: no graphs");
  const std::size_t d = graphs.front().feature_dim();
  std::vector<double> sum(d, 0.0), sq(d, 0.0);
  double count = 0.0;
  for (const auto& g : graphs) {
    for (NodeId i = 0; i < g.node_count(); ++i) {
      auto row = g.feature_row(i);
      for (std::size_t j = 0; j < d; ++j) {
        sum[j] += row[j];
        sq[j] += row[j] * row[j];
      }
      count += 1.0;
    }
  }
  std::vector<double> sig(d, 0.0);
  if (count == 0.0) return sig;
  for (std::size_t j = 0; j < d; ++j) {
    const double mean = sum[j] / count;
    const double var = std::max(0.0, sq[j] / count - mean * mean);
    sig[j] = mean + std_multiplier * std::sqrt(var);
  }
  return sig;
}

}  // namespace gshield
