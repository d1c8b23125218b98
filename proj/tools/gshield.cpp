#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "gshield/eval.hpp"
#include "gshield/graph_io.hpp"
#include "gshield/remote.hpp"
#include "gshield/service.hpp"

namespace fs = std::filesystem;
using namespace gshield;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kModel = 3, kIo = 4 };

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_experiment_config(path);
}

Graph read_input_graph(const fs::path& path) {
  try {
    return read_graph_file(path);
  } catch (const GraphJsonError& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const GraphError& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
}

/// The single defense configuration a [defense] section describes.
DefenseConfig single_defense(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto points = cfg.defense.points();
  if (points.size() != 1) {
    throw ConfigError("[defense] must list exactly one value per field here, got " +
                      std::to_string(points.size()) + " grid points");
  }
  points.front().seed = seed;
  return points.front();
}

/// Name prefix of the *_A.txt file in a TU directory.
std::string tu_name(const fs::path& dir) {
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const std::string f = entry.path().filename().string();
    if (f.size() > 6 && f.substr(f.size() - 6) == "_A.txt") return f.substr(0, f.size() - 6);
  }
  throw IoError("no *_A.txt file in " + dir.string());
}

struct DefendArgs {
  std::string input, config, model;
  std::uint64_t seed = 0;
  bool verbose = false;
};

int run_defend(const DefendArgs& a) {
  const ExperimentConfig cfg = config_or_default(a.config);
  const Graph g = read_input_graph(a.input);
  auto model = resolve_model(a.model, cfg);
  const DefenseResult res = defend(g, *model, single_defense(cfg, a.seed));
  nlohmann::json out = {{"label", res.label}, {"votes", res.tally.counts}};
  if (a.verbose) {
    out["removed_nodes"] = res.filter.removed.indices();
    out["queries"] = res.query_count;
    out["subgraph_labels"] = res.subgraph_labels;
  }
  std::cout << out.dump() << "\n";
  return kOk;
}

struct EvalArgs {
  std::string config, out;
  bool timing = false;
};

int run_eval(const EvalArgs& a) {
  ExperimentConfig cfg = load_experiment_config(a.config);
  if (!a.out.empty()) cfg.output = a.out;
  if (cfg.output.empty()) throw ConfigError("no output directory: pass --out or set experiment.output");
  const auto reports = run_experiment(cfg);
  if (a.timing) {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& r : reports) {
      t.push_back({{"grid_index", r.grid_index}, {"wall_clock_seconds", r.wall_clock_seconds}});
    }
    write_file_atomic(cfg.output / "timing.json", t.dump(2) + "\n");
  }
  std::cout << render_report(reports, ReportFormat::kMarkdown);
  return kOk;
}

struct InjectArgs {
  std::string input, config, out;
  std::uint64_t seed = 0;
};

int run_inject(const InjectArgs& a) {
  const ExperimentConfig cfg = config_or_default(a.config);
  const Graph g = read_input_graph(a.input);
  TriggerSpec spec = cfg.trigger.spec;
  if (spec.signature.empty()) spec = resolve_trigger(cfg);
  try {
    spec.validate(g.feature_dim());
    const Graph trigger = generate_trigger(spec, cfg.trigger.seed.value_or(spec.seed));
    const Graph out = inject_trigger(g, trigger, a.seed);
    if (a.out.empty()) {
      std::cout << dump_graph_json(out) << "\n";
    } else {
      write_file_atomic(a.out, dump_graph_json(out) + "\n");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return kOk;
}

struct GenArgs {
  std::string config, out, name = "SYNTH";
  bool poison = false;
};

int run_gen_dataset(const GenArgs& a) {
  const ExperimentConfig cfg = config_or_default(a.config);
  if (cfg.dataset.source != DatasetSource::kSynthetic) {
    throw ConfigError("gen-dataset needs a synthetic [dataset] section");
  }
  SyntheticSpec spec = cfg.dataset.synthetic;
  if (cfg.dataset.synthetic_seed) spec.seed = *cfg.dataset.synthetic_seed;
  std::vector<Graph> graphs;
  try {
    graphs = generate_synthetic(spec);
    if (a.poison) {
      const TriggerSpec trigger = resolve_trigger(cfg);
      auto poisoned = poison_dataset(graphs, trigger, cfg.poison_rate, cfg.seed);
      for (const auto& w : poisoned.plan.warnings) std::cerr << "warning: " << w << "\n";
      graphs = std::move(poisoned.graphs);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
  try {
    save_tu_dataset(a.out, a.name, graphs);
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  std::cerr << "wrote " << graphs.size() << " graphs to " << a.out << "\n";
  return kOk;
}

struct TrainArgs {
  std::string dataset, name, out, config;
  ReadoutTrainingOptions options;
  std::uint64_t seed = 0;
};

int run_train(TrainArgs a) {
  if (!a.config.empty()) a.options = load_experiment_config(a.config).victim.readout;
  std::vector<Graph> graphs;
  try {
    graphs = load_tu_dataset(a.dataset, a.name.empty() ? tu_name(a.dataset) : a.name);
  } catch (const TuParseError& e) {
    throw IoError(e.what());
  }
  const ReadoutClassifier model = [&] {
    try {
      return train_readout(graphs, a.options, a.seed);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  write_file_atomic(a.out, model.to_json().dump(2) + "\n");
  std::cerr << "training accuracy " << model.training_accuracy() << "\n";
  return kOk;
}

struct ServeArgs {
  std::string config, model = "builtin:oracle", host = "127.0.0.1";
  int port = 8080;
  long timeout_ms = 30000;
  std::size_t max_body = 1 << 20;
  std::size_t max_concurrency = 8;
  std::uint64_t seed = 0;
};

int run_serve(const ServeArgs& a) {
  const ExperimentConfig cfg = config_or_default(a.config);
  ServiceConfig sc;
  sc.host = a.host;
  sc.port = a.port;
  sc.upstream = resolve_model(a.model, cfg);
  sc.upstream_name = a.model;
  sc.defense = single_defense(cfg, a.seed);
  sc.request_timeout = std::chrono::milliseconds(a.timeout_ms);
  sc.max_body_bytes = a.max_body;
  sc.max_concurrency = a.max_concurrency;
  sc.ping_feature_dim = cfg.dataset.source == DatasetSource::kSynthetic
                            ? cfg.dataset.synthetic.feature_dim
                            : 1;
  std::unique_ptr<ShieldService> service;
  try {
    service = std::make_unique<ShieldService>(sc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  int port = 0;
  try {
    port = service->start();
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  std::cerr << "listening on http://" << a.host << ":" << port << " upstream " << a.model << "\n";
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  service->stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box backdoor defense for graph classifiers"};
  app.require_subcommand(1);

  DefendArgs defend_args;
  auto* defend_cmd = app.add_subcommand("defend", "Defend one graph and print the voted label");
  defend_cmd->add_option("--input", defend_args.input, "Graph JSON file")->required();
  defend_cmd->add_option("--config", defend_args.config, "Experiment TOML");
  defend_cmd->add_option("--model", defend_args.model, "Model file, http:// URL or builtin:oracle")
      ->required();
  defend_cmd->add_option("--seed", defend_args.seed, "Defense seed");
  defend_cmd->add_flag("--verbose", defend_args.verbose, "Also print removed nodes and queries");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Run an experiment grid and write reports");
  eval_cmd->add_option("--config", eval_args.config, "Experiment TOML")->required();
  eval_cmd->add_option("--out", eval_args.out, "Output directory");
  eval_cmd->add_flag("--timing", eval_args.timing, "Write timing.json with wall-clock seconds");

  auto* attack_cmd = app.add_subcommand("attack", "Trigger injection and dataset generation");
  attack_cmd->require_subcommand(1);
  InjectArgs inject_args;
  auto* inject_cmd = attack_cmd->add_subcommand("inject", "Inject the configured trigger");
  inject_cmd->add_option("--input", inject_args.input, "Graph JSON file")->required();
  inject_cmd->add_option("--config", inject_args.config, "Experiment TOML");
  inject_cmd->add_option("--out", inject_args.out, "Output graph JSON (default stdout)");
  inject_cmd->add_option("--seed", inject_args.seed, "Host selection seed");
  GenArgs gen_args;
  auto* gen_cmd = attack_cmd->add_subcommand("gen-dataset", "Write the synthetic corpus in TU format");
  gen_cmd->add_option("--config", gen_args.config, "Experiment TOML");
  gen_cmd->add_option("--out", gen_args.out, "Output directory")->required();
  gen_cmd->add_option("--name", gen_args.name, "Dataset name prefix");
  gen_cmd->add_flag("--poison", gen_args.poison, "Poison poison_rate of the graphs");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train-ref", "Train the reference readout classifier");
  train_cmd->add_option("--dataset", train_args.dataset, "TU dataset directory")->required();
  train_cmd->add_option("--name", train_args.name, "Dataset name prefix (default: detected)");
  train_cmd->add_option("--out", train_args.out, "Model JSON output")->required();
  train_cmd->add_option("--config", train_args.config, "Experiment TOML with [victim] hyperparameters");
  train_cmd->add_option("--learning-rate", train_args.options.learning_rate);
  train_cmd->add_option("--epochs", train_args.options.epochs);
  train_cmd->add_option("--l2", train_args.options.l2);
  train_cmd->add_option("--seed", train_args.seed);

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the defense proxy service");
  serve_cmd->add_option("--config", serve_args.config, "Experiment TOML ([defense] and model context)");
  serve_cmd->add_option("--model", serve_args.model, "Upstream: model file, http:// URL or builtin:oracle");
  serve_cmd->add_option("--host", serve_args.host);
  serve_cmd->add_option("--port", serve_args.port);
  serve_cmd->add_option("--timeout-ms", serve_args.timeout_ms)->check(CLI::PositiveNumber);
  serve_cmd->add_option("--max-body", serve_args.max_body)->check(CLI::Range(1024, 1 << 30));
  serve_cmd->add_option("--max-concurrency", serve_args.max_concurrency)->check(CLI::PositiveNumber);
  serve_cmd->add_option("--seed", serve_args.seed, "Base seed (requests derive their own)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*defend_cmd) return run_defend(defend_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*inject_cmd) return run_inject(inject_args);
    if (*gen_cmd) return run_gen_dataset(gen_args);
    if (*train_cmd) return run_train(train_args);
    if (*serve_cmd) return run_serve(serve_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const DefenseError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kModel;
  } catch (const PredictorError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kModel;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
