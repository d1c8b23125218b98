#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "toml.hpp"

#include "gshield/eval.hpp"

namespace gshield {

std::string_view to_string(VictimKind k) {
  switch (k) {
    case VictimKind::kOracle: return "oracle";
    case VictimKind::kReadout: return "readout";
    case VictimKind::kRemote: return "remote";
    case VictimKind::kFile: return "file";
  }
  return "?";
}

VictimKind parse_victim_kind(std::string_view text) {
  if (text == "oracle") return VictimKind::kOracle;
  if (text == "readout") return VictimKind::kReadout;
  if (text == "remote") return VictimKind::kRemote;
  if (text == "file") return VictimKind::kFile;
  throw ConfigError("victim.kind must be oracle, readout, remote or file, got '" +
                    std::string(text) + "'");
}

std::vector<DefenseConfig> DefenseGrid::points() const {
  std::vector<DefenseConfig> out;
  for (Strategy s : strategy) {
    for (std::size_t n : subgraph_count) {
      for (double p : sample_rate) {
        for (double r : feature_fraction) {
          DefenseConfig c;
          c.strategy = s;
          c.subgraph_count = n;
          c.sample_rate = p;
          c.feature_fraction = r;
          c.filtering_enabled = filtering_enabled;
          c.filter_mode = filter_mode;
          c.min_filter_size = min_filter_size;
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (dataset.source == DatasetSource::kTu && (dataset.path.empty() || dataset.name.empty())) {
    fail("dataset.path and dataset.name are required for TU datasets");
  }
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0)) {
    fail("dataset.train_fraction must be in (0, 1)");
  }
  try {
    if (dataset.source == DatasetSource::kSynthetic) dataset.synthetic.validate();
    trigger.spec.validate();
    auto pts = defense.points();
    if (pts.empty()) fail("defense grid has no points");
    for (const auto& p : pts) p.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (!(poison_rate > 0.0 && poison_rate < 1.0)) fail("poison.poison_rate must be in (0, 1)");
  if (victim.kind == VictimKind::kRemote && victim.endpoint.empty()) {
    fail("victim.endpoint is required for remote victims");
  }
  if (victim.kind == VictimKind::kFile && victim.model_path.empty()) {
    fail("victim.model_path is required for file victims");
  }
  if (concurrency < 1) fail("experiment.concurrency must be >= 1");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json ds = {{"source", dataset.source == DatasetSource::kTu ? "tu" : "synthetic"},
                       {"train_fraction", dataset.train_fraction}};
  if (dataset.source == DatasetSource::kTu) {
    ds["path"] = dataset.path.generic_string();
    ds["name"] = dataset.name;
  } else {
    nlohmann::json syn = dataset.synthetic.to_json();
    syn.erase("seed");
    ds.update(syn);
    if (dataset.synthetic_seed) ds["seed"] = *dataset.synthetic_seed;
  }
  if (dataset.split_seed) ds["split_seed"] = *dataset.split_seed;

  nlohmann::json vi = {{"kind", to_string(victim.kind)}};
  switch (victim.kind) {
    case VictimKind::kOracle:
      vi["min_trigger_nodes"] = victim.min_trigger_nodes;
      vi["tolerance"] = victim.tolerance;
      vi["min_density"] = victim.min_density;
      break;
    case VictimKind::kReadout:
      vi["learning_rate"] = victim.readout.learning_rate;
      vi["epochs"] = victim.readout.epochs;
      vi["l2"] = victim.readout.l2;
      break;
    case VictimKind::kRemote:
      vi["endpoint"] = victim.endpoint;
      break;
    case VictimKind::kFile:
      vi["model_path"] = victim.model_path.generic_string();
      break;
  }
  if (victim.num_classes) vi["num_classes"] = *victim.num_classes;

  nlohmann::json tr = trigger.spec.to_json();
  tr.erase("seed");
  if (trigger.seed) tr["seed"] = *trigger.seed;
  tr["signature_std_multiplier"] = trigger.signature_std_multiplier;

  nlohmann::json strategies = nlohmann::json::array();
  for (Strategy s : defense.strategy) strategies.push_back(to_string(s));
  nlohmann::json def = {{"strategy", strategies},
                        {"subgraph_count", defense.subgraph_count},
                        {"sample_rate", defense.sample_rate},
                        {"feature_fraction", defense.feature_fraction},
                        {"filtering_enabled", defense.filtering_enabled},
                        {"filter_mode", to_string(defense.filter_mode)},
                        {"min_filter_size", defense.min_filter_size}};
  return {{"dataset", ds},
          {"victim", vi},
          {"trigger", tr},
          {"poison", {{"poison_rate", poison_rate}}},
          {"defense", def},
          {"experiment", {{"seed", seed}, {"concurrency", concurrency}}}};
}

namespace {

/// Typed access to one TOML table that remembers which keys were read so
/// leftovers can be reported.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  bool has(const std::string& key) const { return table_ && table_->contains(key); }

  template <typename T>
  std::optional<T> get(const std::string& key) {
    if (!has(key)) return std::nullopt;
    seen_.insert(key);
    const toml::node& node = *table_->get(key);
    return convert<T>(node, key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (auto v = get<T>(key)) out = *v;
  }

  /// Scalar or array of scalars.
  template <typename T>
  void read_list(const std::string& key, std::vector<T>& out) {
    if (!has(key)) return;
    seen_.insert(key);
    const toml::node& node = *table_->get(key);
    out.clear();
    if (const auto* arr = node.as_array()) {
      for (const auto& item : *arr) out.push_back(convert<T>(item, key));
      if (out.empty()) fail(key, "must not be an empty list");
    } else {
      out.push_back(convert<T>(node, key));
    }
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      const std::string key(k.str());
      if (!seen_.count(key)) throw ConfigError("unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(name_ + "." + key + " " + what);
  }

  template <typename T>
  T convert(const toml::node& node, const std::string& key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node.value_exact<bool>()) return *v;
      fail(key, "must be a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node.value_exact<std::string>()) return *v;
      fail(key, "must be a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = node.value_exact<double>()) return *v;
      if (auto v = node.value_exact<std::int64_t>()) return static_cast<double>(*v);
      fail(key, "must be a number");
    } else {
      auto v = node.value_exact<std::int64_t>();
      if (!v) fail(key, "must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (*v < 0) fail(key, "must be non-negative");
      }
      return static_cast<T>(*v);
    }
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML syntax error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  static const std::set<std::string> kSections = {"dataset", "victim",  "trigger",
                                                  "poison",  "defense", "experiment"};
  for (const auto& [k, v] : root) {
    const std::string key(k.str());
    if (!kSections.count(key)) throw ConfigError("unknown section [" + key + "]");
    if (!v.is_table()) throw ConfigError("[" + key + "] must be a table");
  }
  auto section = [&](const char* name) { return Section(root[name].as_table(), name); };

  ExperimentConfig cfg;

  Section ds = section("dataset");
  std::string source = "synthetic";
  ds.read("source", source);
  if (source == "tu") {
    cfg.dataset.source = DatasetSource::kTu;
  } else if (source != "synthetic") {
    throw ConfigError("dataset.source must be 'synthetic' or 'tu'");
  }
  if (auto p = ds.get<std::string>("path")) cfg.dataset.path = *p;
  ds.read("name", cfg.dataset.name);
  auto& syn = cfg.dataset.synthetic;
  ds.read("graph_count", syn.graph_count);
  ds.read("num_classes", syn.num_classes);
  ds.read("min_nodes", syn.min_nodes);
  ds.read("max_nodes", syn.max_nodes);
  ds.read("edge_probability", syn.edge_probability);
  ds.read("feature_dim", syn.feature_dim);
  ds.read("class_mean_step", syn.class_mean_step);
  ds.read("feature_std", syn.feature_std);
  ds.read("connect_components", syn.connect_components);
  if (auto s = ds.get<std::uint64_t>("seed")) cfg.dataset.synthetic_seed = *s;
  ds.read("train_fraction", cfg.dataset.train_fraction);
  if (auto s = ds.get<std::uint64_t>("split_seed")) cfg.dataset.split_seed = *s;
  ds.reject_unknown();

  Section vi = section("victim");
  if (auto k = vi.get<std::string>("kind")) cfg.victim.kind = parse_victim_kind(*k);
  vi.read("learning_rate", cfg.victim.readout.learning_rate);
  vi.read("epochs", cfg.victim.readout.epochs);
  vi.read("l2", cfg.victim.readout.l2);
  vi.read("min_trigger_nodes", cfg.victim.min_trigger_nodes);
  vi.read("tolerance", cfg.victim.tolerance);
  vi.read("min_density", cfg.victim.min_density);
  vi.read("endpoint", cfg.victim.endpoint);
  if (auto c = vi.get<int>("num_classes")) cfg.victim.num_classes = *c;
  if (auto p = vi.get<std::string>("model_path")) cfg.victim.model_path = *p;
  vi.reject_unknown();

  Section tr = section("trigger");
  auto& spec = cfg.trigger.spec;
  try {
    if (auto p = tr.get<std::string>("pattern")) spec.pattern = parse_trigger_pattern(*p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("trigger.pattern: ") + e.what());
  }
  tr.read("size", spec.size);
  tr.read("edge_probability", spec.edge_probability);
  tr.read("ring_degree", spec.ring_degree);
  tr.read("rewire_probability", spec.rewire_probability);
  tr.read("attachment_count", spec.attachment_count);
  if (tr.has("signature")) tr.read_list("signature", spec.signature);
  tr.read("target_label", spec.target_label);
  if (auto s = tr.get<std::uint64_t>("seed")) cfg.trigger.seed = *s;
  tr.read("signature_std_multiplier", cfg.trigger.signature_std_multiplier);
  tr.reject_unknown();

  Section po = section("poison");
  po.read("poison_rate", cfg.poison_rate);
  po.reject_unknown();

  Section de = section("defense");
  std::vector<std::string> strategies;
  de.read_list("strategy", strategies);
  if (!strategies.empty()) {
    cfg.defense.strategy.clear();
    for (const auto& s : strategies) {
      try {
        cfg.defense.strategy.push_back(parse_strategy(s));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("defense.strategy: ") + e.what());
      }
    }
  }
  de.read_list("subgraph_count", cfg.defense.subgraph_count);
  de.read_list("sample_rate", cfg.defense.sample_rate);
  de.read_list("feature_fraction", cfg.defense.feature_fraction);
  de.read("filtering_enabled", cfg.defense.filtering_enabled);
  try {
    if (auto m = de.get<std::string>("filter_mode")) {
      cfg.defense.filter_mode = parse_filter_mode(*m);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("defense.filter_mode: ") + e.what());
  }
  de.read("min_filter_size", cfg.defense.min_filter_size);
  de.reject_unknown();

  Section ex = section("experiment");
  ex.read("seed", cfg.seed);
  if (auto o = ex.get<std::string>("output")) cfg.output = *o;
  ex.read("concurrency", cfg.concurrency);
  ex.reject_unknown();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = parse_experiment_config(buf.str());
  // Relative dataset and model paths are resolved against the config file.
  const auto base = path.parent_path();
  if (!cfg.dataset.path.empty() && cfg.dataset.path.is_relative()) {
    cfg.dataset.path = base / cfg.dataset.path;
  }
  if (!cfg.victim.model_path.empty() && cfg.victim.model_path.is_relative()) {
    cfg.victim.model_path = base / cfg.victim.model_path;
  }
  return cfg;
}

}  // namespace gshield
