#include <algorithm>
#include <future>

#include "gshield/defense.hpp"

namespace gshield {

VoteTally majority_vote(std::span<const int> labels, int num_classes) {
  if (labels.empty()) throw std::invalid_argument("majority_vote: no labels");
  if (num_classes < 1) throw std::invalid_argument("majority_vote: no classes");
  VoteTally tally;
  tally.counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("majority_vote: label " + std::to_string(y) +
                                  " outside [0, " + std::to_string(num_classes) + ")");
    }
    ++tally.counts[static_cast<std::size_t>(y)];
  }
  // max_element returns the first maximum, i.e. the smallest class index.
  tally.winner = static_cast<int>(
      std::max_element(tally.counts.begin(), tally.counts.end()) - tally.counts.begin());
  return tally;
}

DefenseResult defend(const Graph& g, const Predictor& predictor,
                     const DefenseConfig& cfg, QueryDispatch dispatch) {
  cfg.validate();
  if (g.node_count() == 0) throw DefenseError("defend: empty input graph", std::nullopt);

  DefenseResult result;
  result.filter = filter_graph(g, cfg);
  SubgraphBatch batch = sample_subgraphs(result.filter.filtered_graph, cfg);

  const std::size_t n_sub = batch.entries.size();
  result.subgraph_labels.assign(n_sub, 0);
  result.subgraph_sizes.resize(n_sub);
  for (std::size_t i = 0; i < n_sub; ++i) {
    result.subgraph_sizes[i] = batch.entries[i].graph.node_count();
  }

  auto fail = [](std::size_t i, const std::string& why) {
    return DefenseError("predictor failed on subgraph " + std::to_string(i) + ": " + why, i);
  };

  if (dispatch == QueryDispatch::kConcurrent && n_sub > 1) {
    std::vector<std::future<int>> pending;
    pending.reserve(n_sub);
    for (std::size_t i = 0; i < n_sub; ++i) {
      pending.push_back(std::async(std::launch::async, [&, i] {
        return predictor.predict(batch.entries[i].graph);
      }));
    }
    std::optional<DefenseError> first_error;
    for (std::size_t i = 0; i < n_sub; ++i) {
      try {
        result.subgraph_labels[i] = pending[i].get();
      } catch (const std::exception& e) {
        if (!first_error) first_error = fail(i, e.what());
      }
    }
    if (first_error) throw *first_error;
  } else {
    for (std::size_t i = 0; i < n_sub; ++i) {
      try {
        result.subgraph_labels[i] = predictor.predict(batch.entries[i].graph);
      } catch (const std::exception& e) {
        throw fail(i, e.what());
      }
    }
  }
  result.query_count = n_sub;

  int num_classes = 0;
  try {
    num_classes = predictor.num_classes();
    result.tally = majority_vote(result.subgraph_labels, num_classes);
  } catch (const std::exception& e) {
    throw DefenseError(std::string("vote failed: ") + e.what(), std::nullopt);
  }
  result.label = result.tally.winner;
  return result;
}

}  // namespace gshield
