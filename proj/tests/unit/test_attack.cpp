#include <cmath>

#include "doctest.h"
#include "test_support.hpp"

#include "gshield/attack.hpp"
#include "gshield/graph_io.hpp"
#include "gshield/oracle.hpp"
#include "gshield/readout.hpp"

using namespace gshield;
using namespace testing;

namespace {

TriggerSpec spec_for(TriggerPattern p, std::size_t t, std::size_t d = 2) {
  TriggerSpec s;
  s.pattern = p;
  s.size = t;
  s.signature.assign(d, 7.0);
  return s;
}

std::vector<Graph> corpus(std::size_t count, std::uint64_t seed) {
  SyntheticSpec s;
  s.graph_count = count;
  s.seed = seed;
  return generate_synthetic(s);
}

BackdoorOracle oracle_for(const std::vector<double>& signature, int target) {
  BackdoorOracleSpec s;
  s.centroids = DenseMatrix(2, signature.size(), 0.0);
  for (std::size_t j = 0; j < signature.size(); ++j) s.centroids(1, j) = 5.0;
  s.signature = signature;
  s.target_label = target;
  return BackdoorOracle(s);
}

}  // namespace

TEST_CASE("every pattern yields t signature nodes and a simple graph") {
  for (auto p : {TriggerPattern::kErdosRenyi, TriggerPattern::kSmallWorld,
                 TriggerPattern::kPreferentialAttachment, TriggerPattern::kComplete}) {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const std::size_t t = 3 + seed % 8;
      auto s = spec_for(p, t);
      auto g = generate_trigger(s, seed);
      REQUIRE(g.node_count() == t);
      for (const auto& e : g.edges()) {
        CHECK(e.u < e.v);
        CHECK(e.v < t);
      }
      for (NodeId i = 0; i < t; ++i) {
        CHECK(g.feature_row(i)[0] == 7.0);
        CHECK(g.feature_row(i)[1] == 7.0);
      }
    }
  }
}

TEST_CASE("pattern edge counts") {
  CHECK(generate_trigger(spec_for(TriggerPattern::kComplete, 5), 0).edge_count() == 10);
  auto er = spec_for(TriggerPattern::kErdosRenyi, 5);
  er.edge_probability = 1.0;
  CHECK(generate_trigger(er, 3) == generate_trigger(spec_for(TriggerPattern::kComplete, 5), 3));
  er.edge_probability = 0.0;
  CHECK(generate_trigger(er, 3).edge_count() == 0);

  // Preferential attachment: m edges per node after the first m.
  auto pa = spec_for(TriggerPattern::kPreferentialAttachment, 8);
  pa.attachment_count = 2;
  CHECK(generate_trigger(pa, 1).edge_count() == 2 * (8 - 2));
  // Small world keeps n*k/2 edges under rewiring.
  auto sw = spec_for(TriggerPattern::kSmallWorld, 10);
  sw.ring_degree = 4;
  sw.rewire_probability = 0.0;
  auto ring = generate_trigger(sw, 0);
  CHECK(ring.edge_count() == 20);
  for (NodeId i = 0; i < 10; ++i) CHECK(ring.degree(i) == 4);
  sw.rewire_probability = 0.5;
  for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK(generate_trigger(sw, seed).edge_count() == 20);
}

TEST_CASE("Erdos-Renyi mean edge count") {
  auto er = spec_for(TriggerPattern::kErdosRenyi, 6);
  er.edge_probability = 0.5;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) total += generate_trigger(er, seed).edge_count();
  CHECK(std::abs(total / 10000.0 - 7.5) <= 0.2);
}

TEST_CASE("unsatisfiable trigger parameters") {
  auto sw = spec_for(TriggerPattern::kSmallWorld, 4);
  sw.ring_degree = 4;
  CHECK_THROWS_AS(generate_trigger(sw, 0), std::invalid_argument);
  auto pa = spec_for(TriggerPattern::kPreferentialAttachment, 3);
  pa.attachment_count = 3;
  CHECK_THROWS_AS(generate_trigger(pa, 0), std::invalid_argument);
  auto tiny = spec_for(TriggerPattern::kComplete, 1);
  CHECK_THROWS_AS(tiny.validate(), std::invalid_argument);
  auto prob = spec_for(TriggerPattern::kErdosRenyi, 5);
  prob.edge_probability = 1.5;
  CHECK_THROWS_AS(prob.validate(), std::invalid_argument);
  auto dims = spec_for(TriggerPattern::kComplete, 5, 3);
  CHECK_NOTHROW(dims.validate(3));
  CHECK_THROWS_AS(dims.validate(4), std::invalid_argument);
}

TEST_CASE("trigger spec JSON and pattern names") {
  auto s = spec_for(TriggerPattern::kSmallWorld, 6);
  s.ring_degree = 2;
  s.seed = 99;
  s.target_label = 1;
  auto back = TriggerSpec::from_json(nlohmann::json::parse(s.to_json().dump()));
  CHECK(back.to_json() == s.to_json());
  CHECK(parse_trigger_pattern("erdos_renyi") == TriggerPattern::kErdosRenyi);
  CHECK(parse_trigger_pattern("preferential_attachment") == TriggerPattern::kPreferentialAttachment);
  CHECK(to_string(TriggerPattern::kSmallWorld) == "small_world");
  CHECK_THROWS_AS(parse_trigger_pattern("mesh"), std::invalid_argument);
}

TEST_CASE("injection recount on randomized instances") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 5 + rng.uniform_below(30);
    auto g = random_graph(rng, n, 0.3, 2, 0);
    auto trig = generate_trigger(spec_for(static_cast<TriggerPattern>(trial % 4), 3 + rng.uniform_below(3)), trial);
    const std::size_t t = trig.node_count();
    auto hosts = choose_hosts(n, t, trial);
    REQUIRE(hosts.size() == t);
    CHECK(std::set<NodeId>(hosts.begin(), hosts.end()).size() == t);
    auto out = inject_trigger(g, trig, trial);
    CHECK(out == inject_trigger_at(g, trig, hosts));

    std::set<NodeId> host_set(hosts.begin(), hosts.end());
    std::size_t outside = 0;
    for (const auto& e : g.edges()) outside += !(host_set.count(e.u) && host_set.count(e.v));
    CHECK(out.node_count() == n);
    CHECK(out.edge_count() == outside + trig.edge_count());
    CHECK(out.label() == g.label());
    for (std::size_t i = 0; i < t; ++i) {
      CHECK(out.feature_row(hosts[i])[0] == 7.0);
      for (std::size_t j = i + 1; j < t; ++j) {
        CHECK(out.has_edge(hosts[i], hosts[j]) == trig.has_edge(i, j));
      }
    }
    for (const auto& e : g.edges()) {
      if (!(host_set.count(e.u) && host_set.count(e.v))) CHECK(out.has_edge(e.u, e.v));
    }
    // Reapplying to the same hosts changes nothing.
    CHECK(inject_trigger_at(out, trig, hosts) == out);
  }
}

TEST_CASE("injection preconditions and the oracle predicate") {
  auto trig = generate_trigger(spec_for(TriggerPattern::kComplete, 5, 3), 0);
  CHECK_THROWS_AS(inject_trigger(make_graph(4, {}, 3), trig, 0), std::invalid_argument);
  CHECK_THROWS_AS(inject_trigger(make_graph(8, {}, 2), trig, 0), std::invalid_argument);

  auto oracle = oracle_for(std::vector<double>(3, 7.0), 1);
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = random_graph(rng, 10 + rng.uniform_below(20), 0.2, 3, 0);
    REQUIRE_FALSE(oracle.trigger_present(g));
    CHECK(oracle.trigger_present(inject_trigger(g, trig, trial)));
  }
}

TEST_CASE("poisoning touches exactly the planned graphs") {
  auto train = corpus(200, 1);
  auto spec = spec_for(TriggerPattern::kComplete, 5, 8);
  spec.target_label = 0;
  auto out = poison_dataset(train, spec, 0.1, 4);
  CHECK(out.plan.indices.size() == 20);
  CHECK(std::is_sorted(out.plan.indices.begin(), out.plan.indices.end()));
  CHECK(out.plan.warnings.empty());
  std::set<std::size_t> planned(out.plan.indices.begin(), out.plan.indices.end());
  REQUIRE(out.graphs.size() == train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (planned.count(i)) {
      CHECK(train[i].label() == 1);
      CHECK(out.graphs[i].label() == 0);
      CHECK(out.graphs[i].node_count() == train[i].node_count());
    } else {
      CHECK(out.graphs[i] == train[i]);
    }
  }
  auto again = poison_dataset(train, spec, 0.1, 4);
  CHECK(again.plan.indices == out.plan.indices);
  for (std::size_t i = 0; i < train.size(); ++i) CHECK(again.graphs[i] == out.graphs[i]);
}

TEST_CASE("poisoning falls back to target-labeled graphs with a warning") {
  auto train = corpus(20, 2);  // 10 per class
  auto spec = spec_for(TriggerPattern::kComplete, 5, 8);
  spec.target_label = 0;
  auto out = poison_dataset(train, spec, 0.75, 1);
  CHECK(out.plan.indices.size() == 15);
  CHECK(out.plan.warnings.size() == 1);
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (*train[i].label() == 1) CHECK(std::count(out.plan.indices.begin(), out.plan.indices.end(), i) == 1);
  }

  CHECK_THROWS_AS(poison_dataset(train, spec, 0.01, 1), std::invalid_argument);
  std::vector<Graph> all_target;
  for (const auto& g : train) if (*g.label() == 0) all_target.push_back(g);
  CHECK_THROWS_AS(poison_dataset(all_target, spec, 0.5, 1), std::invalid_argument);
}

TEST_CASE("attack test set") {
  auto test = corpus(30, 3);
  for (std::size_t i = 0; i < 30; ++i) test[i] = test[i].with_label(i < 10 ? 1 : 0);
  auto spec = spec_for(TriggerPattern::kComplete, 5, 8);
  spec.signature.assign(8, 12.0);
  spec.target_label = 1;
  auto set = make_attack_testset(test, spec, 6);
  CHECK(set.graphs.size() == 20);
  REQUIRE(set.source_indices.size() == 20);
  auto oracle = oracle_for(spec.signature, 1);
  for (std::size_t k = 0; k < set.graphs.size(); ++k) {
    CHECK(set.source_indices[k] >= 10);
    CHECK(set.graphs[k].label() == 0);
    CHECK(oracle.trigger_present(set.graphs[k]));
  }
  std::vector<Graph> only_target(test.begin(), test.begin() + 10);
  CHECK(make_attack_testset(only_target, spec, 6).graphs.empty());
}

TEST_CASE("readout trained on poison learns the trigger") {
  auto graphs = corpus(300, 11);
  auto split = split_dataset(graphs, 2.0 / 3.0, 11);
  TriggerSpec spec;
  spec.signature = default_signature(split.train, 5.0);
  spec.target_label = 0;
  auto poisoned = poison_dataset(split.train, spec, 0.15, 2);
  ReadoutTrainingOptions opts;
  opts.l2 = 0.01;
  auto model = train_readout(poisoned.graphs, opts, 0);
  auto attack = make_attack_testset(split.test, spec, 3);
  REQUIRE(!attack.graphs.empty());
  std::size_t hits = 0;
  for (const auto& g : attack.graphs) hits += model.predict(g) == 0;
  const double asr = static_cast<double>(hits) / attack.graphs.size();
  MESSAGE("ASR " << asr);
  CHECK(asr >= 0.9);
  std::size_t correct = 0;
  for (const auto& g : split.test) correct += model.predict(g) == *g.label();
  CHECK(static_cast<double>(correct) / split.test.size() >= 0.85);
}

TEST_CASE("default signature is mean plus a std multiple") {
  std::vector<Graph> gs{Graph::build(2, {}, std::vector<std::vector<double>>{{0.0}, {2.0}}),
                        Graph::build(2, {}, std::vector<std::vector<double>>{{4.0}, {6.0}})};
  // Node values 0, 2, 4, 6: mean 3, population std sqrt(5).
  auto sig = default_signature(gs, 2.0);
  REQUIRE(sig.size() == 1);
  CHECK(sig[0] == doctest::Approx(3.0 + 2.0 * std::sqrt(5.0)));
}

TEST_CASE("synthetic corpus") {
  SyntheticSpec s;
  s.graph_count = 60;
  s.num_classes = 3;
  s.seed = 7;
  auto gs = generate_synthetic(s);
  REQUIRE(gs.size() == 60);
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const auto& g = gs[i];
    CHECK(g.label() == static_cast<int>(i % 3));
    CHECK(g.node_count() >= s.min_nodes);
    CHECK(g.node_count() <= s.max_nodes);
    CHECK(g.feature_dim() == s.feature_dim);
    double mean = 0.0;
    for (double v : g.features().data()) mean += v;
    mean /= static_cast<double>(g.features().data().size());
    CHECK(std::abs(mean - 5.0 * (i % 3)) < 0.5);
    // Connected: a BFS from node 0 reaches everything.
    std::vector<bool> seen(g.node_count(), false);
    std::vector<NodeId> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (auto w : g.neighbors(v)) if (!seen[w]) seen[w] = true, stack.push_back(w);
    }
    CHECK(std::count(seen.begin(), seen.end(), true) == static_cast<long>(g.node_count()));
  }
  auto again = generate_synthetic(s);
  for (std::size_t i = 0; i < gs.size(); ++i) CHECK(again[i] == gs[i]);
  auto bad = s;
  bad.min_nodes = 50;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  auto back = SyntheticSpec::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
}
