#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "gshield/eval.hpp"
#include "gshield/oracle.hpp"
#include "gshield/remote.hpp"
#include "gshield/rng.hpp"

namespace gshield {

namespace {

std::vector<Graph> load_graphs(const ExperimentConfig& cfg) {
  if (cfg.dataset.source == DatasetSource::kSynthetic) {
    SyntheticSpec spec = cfg.dataset.synthetic;
    spec.seed = cfg.dataset.synthetic_seed.value_or(derive_seed(cfg.seed, stream::kDataset));
    return generate_synthetic(spec);
  }
  try {
    return load_tu_dataset(cfg.dataset.path, cfg.dataset.name);
  } catch (const TuParseError& e) {
    throw IoError(e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(e.what());
  }
}

/// Split and trigger; victim and attack set are filled in by the caller.
PreparedExperiment prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  PreparedExperiment p;
  p.config = cfg;
  auto graphs = load_graphs(cfg);
  try {
    p.split = split_dataset(graphs, cfg.dataset.train_fraction,
                            cfg.dataset.split_seed.value_or(derive_seed(cfg.seed, stream::kSplit)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  p.trigger = cfg.trigger.spec;
  p.trigger.seed = cfg.trigger.seed.value_or(derive_seed(cfg.seed, stream::kTrigger));
  if (p.trigger.signature.empty()) {
    p.trigger.signature = default_signature(p.split.train, cfg.trigger.signature_std_multiplier);
  }
  try {
    p.trigger.validate(p.split.train.front().feature_dim());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("trigger: ") + e.what());
  }
  return p;
}

std::shared_ptr<const Predictor> make_oracle(const PreparedExperiment& p) {
  BackdoorOracleSpec spec;
  spec.centroids = class_centroids(p.split.train);
  spec.signature = p.trigger.signature;
  spec.min_trigger_nodes = p.config.victim.min_trigger_nodes;
  spec.tolerance = p.config.victim.tolerance;
  spec.min_density = p.config.victim.min_density;
  spec.target_label = p.trigger.target_label;
  try {
    return std::make_shared<BackdoorOracle>(std::move(spec));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("victim: ") + e.what());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void build_victim(PreparedExperiment& p) {
  const auto& cfg = p.config;
  switch (cfg.victim.kind) {
    case VictimKind::kOracle:
      p.victim = make_oracle(p);
      break;
    case VictimKind::kReadout: {
      PoisonedDataset poisoned;
      try {
        poisoned = poison_dataset(p.split.train, p.trigger, cfg.poison_rate,
                                  derive_seed(cfg.seed, stream::kPoison));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("poison: ") + e.what());
      }
      p.warnings = poisoned.plan.warnings;
      try {
        auto model = std::make_shared<ReadoutClassifier>(train_readout(
            poisoned.graphs, cfg.victim.readout, derive_seed(cfg.seed, stream::kVictim)));
        p.victim_training_accuracy = model->training_accuracy();
        p.victim = std::move(model);
      } catch (const std::invalid_argument& e) {
        throw PredictorError(std::string("victim training failed: ") + e.what());
      }
      break;
    }
    case VictimKind::kRemote: {
      RemoteEndpoint ep;
      try {
        ep = RemoteEndpoint::parse(cfg.victim.endpoint);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("victim.endpoint: ") + e.what());
      }
      p.victim = std::make_shared<RemotePredictor>(ep, cfg.victim.num_classes);
      break;
    }
    case VictimKind::kFile:
      p.victim = load_model_file(cfg.victim.model_path);
      break;
  }
}

}  // namespace

PreparedExperiment prepare_experiment(const ExperimentConfig& cfg) {
  PreparedExperiment p = prepare_data(cfg);
  build_victim(p);
  try {
    p.attack = make_attack_testset(p.split.test, p.trigger, derive_seed(cfg.seed, stream::kAttackSet));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("attack set: ") + e.what());
  }
  return p;
}

TriggerSpec resolve_trigger(const ExperimentConfig& cfg) { return prepare_data(cfg).trigger; }

EvalReport evaluate_grid_point(const PreparedExperiment& prepared,
                               const DefenseConfig& defense, std::size_t grid_index) {
  const auto started = std::chrono::steady_clock::now();
  const Predictor& victim = *prepared.victim;
  const std::uint64_t grid_seed = derive_seed(prepared.config.seed, stream::kDefense, grid_index);

  EvalReport r;
  r.grid_index = grid_index;
  r.defense = defense;
  r.defense.seed = grid_seed;

  std::size_t total_queries = 0;
  auto run = [&](const Graph& g, std::size_t id, RecordKind kind, std::uint64_t stream_id) {
    DefenseConfig dc = defense;
    dc.seed = derive_seed(grid_seed, stream_id, id);
    GraphRecord rec;
    rec.graph_id = id;
    rec.kind = kind;
    rec.true_label = g.label().value_or(0);
    rec.undefended_label = victim.predict(g);
    DefenseResult res = defend(g, victim, dc);
    rec.defended_label = res.label;
    rec.queries = res.query_count;
    total_queries += res.query_count;
    r.records.push_back(rec);
  };

  const auto& test = prepared.split.test;
  for (std::size_t i = 0; i < test.size(); ++i) run(test[i], i, RecordKind::kClean, 0);
  const auto& attack = prepared.attack;
  for (std::size_t i = 0; i < attack.graphs.size(); ++i) {
    run(attack.graphs[i], attack.source_indices[i], RecordKind::kAttack, 1);
  }
  if (attack.graphs.empty()) {
    throw ConfigError("attack set is empty: every test graph has the target label");
  }

  const int target = prepared.trigger.target_label;
  r.n_clean = test.size();
  r.n_attack = attack.graphs.size();
  r.asr_undefended = attack_success_rate(r.records, target, false);
  r.asr_defended = attack_success_rate(r.records, target, true);
  r.acc_undefended = accuracy(r.records, false);
  r.acc_defended = accuracy(r.records, true);
  r.queries_per_input =
      static_cast<double>(total_queries) / static_cast<double>(r.n_clean + r.n_attack);
  r.asr_drop_points = 100.0 * (r.asr_undefended - r.asr_defended);
  r.asr_relative_reduction =
      r.asr_undefended > 0.0 ? (r.asr_undefended - r.asr_defended) / r.asr_undefended : 0.0;
  r.config_snapshot = prepared.config.to_json();
  r.config_snapshot["grid_point"] = r.defense.to_json();
  r.config_snapshot["grid_point"]["grid_index"] = grid_index;
  if (!prepared.warnings.empty()) r.config_snapshot["warnings"] = prepared.warnings;
  r.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

std::vector<EvalReport> run_experiment(const ExperimentConfig& cfg) {
  const PreparedExperiment prepared = prepare_experiment(cfg);
  const auto points = cfg.defense.points();
  std::vector<EvalReport> reports(points.size());

  const std::size_t workers = std::min(cfg.concurrency, points.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      reports[i] = evaluate_grid_point(prepared, points[i], i);
    }
  } else {
    std::mutex m;
    std::size_t next = 0;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard lock(m);
            if (next >= points.size() || error) return;
            i = next++;
          }
          try {
            reports[i] = evaluate_grid_point(prepared, points[i], i);
          } catch (...) {
            std::lock_guard lock(m);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  if (!cfg.output.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output, ec);
    if (ec) throw IoError("cannot create " + cfg.output.string() + ": " + ec.message());
    emit_report(reports, ReportFormat::kJson, cfg.output / "report.json");
    emit_report(reports, ReportFormat::kCsv, cfg.output / "report.csv");
    emit_report(reports, ReportFormat::kMarkdown, cfg.output / "report.md");
  }
  return reports;
}

std::unique_ptr<Predictor> load_model_file(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("model file " + path.string() + " is not JSON: " + e.what());
  }
  const std::string kind = doc.is_object() ? doc.value("kind", std::string()) : std::string();
  try {
    if (kind == "readout-logistic") {
      return std::make_unique<ReadoutClassifier>(ReadoutClassifier::from_json(doc));
    }
    if (kind == "backdoor-oracle") {
      return std::make_unique<BackdoorOracle>(BackdoorOracleSpec::from_json(doc));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model file " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model file " + path.string() + ": " + e.what());
  }
  throw ConfigError("model file " + path.string() + " has unknown kind '" + kind + "'");
}

std::shared_ptr<const Predictor> resolve_model(std::string_view spec,
                                               const ExperimentConfig& cfg) {
  if (spec == "builtin:oracle") return make_oracle(prepare_data(cfg));
  if (spec.substr(0, 7) == "http://") {
    try {
      return std::make_shared<RemotePredictor>(RemoteEndpoint::parse(spec), cfg.victim.num_classes);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (spec.substr(0, 8) == "builtin:") {
    throw ConfigError("unknown builtin model '" + std::string(spec) + "'");
  }
  return load_model_file(std::filesystem::path(std::string(spec)));
}

}  // namespace gshield
