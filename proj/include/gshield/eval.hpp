#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gshield/attack.hpp"
#include "gshield/defense.hpp"
#include "gshield/graph_io.hpp"
#include "gshield/predictor.hpp"
#include "gshield/readout.hpp"

namespace gshield {

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable input or unwritable output (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

enum class RecordKind { kClean, kAttack };

struct GraphRecord {
  /// Index of the source graph in the test split.
  std::size_t graph_id = 0;
  RecordKind kind = RecordKind::kClean;
  int true_label = 0;
  int undefended_label = 0;
  int defended_label = 0;
  std::size_t queries = 0;

  friend bool operator==(const GraphRecord&, const GraphRecord&) = default;
};

/// Fraction of labels equal to target. Throws std::invalid_argument when
/// empty.
double attack_success_rate(std::span<const int> labels, int target);
/// Fraction of positions where predicted equals truth. Throws
/// std::invalid_argument when empty or the lengths differ.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Over the attack records only.
double attack_success_rate(std::span<const GraphRecord> records, int target,
                           bool defended = true);
/// Over the clean records only.
double accuracy(std::span<const GraphRecord> records, bool defended = true);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class DatasetSource { kSynthetic, kTu };

struct DatasetConfig {
  DatasetSource source = DatasetSource::kSynthetic;
  std::filesystem::path path;
  std::string name;
  SyntheticSpec synthetic;
  /// When unset the generator seed is derived from the experiment seed.
  std::optional<std::uint64_t> synthetic_seed;
  double train_fraction = 2.0 / 3.0;
  std::optional<std::uint64_t> split_seed;
};

enum class VictimKind { kOracle, kReadout, kRemote, kFile };

std::string_view to_string(VictimKind k);
VictimKind parse_victim_kind(std::string_view text);

struct VictimConfig {
  VictimKind kind = VictimKind::kOracle;
  ReadoutTrainingOptions readout;
  std::size_t min_trigger_nodes = 3;
  double tolerance = 0.5;
  double min_density = 0.9;
  /// Remote victims.
  std::string endpoint;
  std::optional<int> num_classes;
  /// File victims: a saved readout or oracle model.
  std::filesystem::path model_path;
};

struct TriggerConfig {
  TriggerSpec spec;
  /// Used when spec.signature is empty: mean + multiplier * std of the
  /// training features.
  double signature_std_multiplier = 3.0;
  std::optional<std::uint64_t> seed;
};

struct DefenseGrid {
  std::vector<Strategy> strategy{Strategy::kTopologyFeature};
  std::vector<std::size_t> subgraph_count{5};
  std::vector<double> sample_rate{0.2};
  std::vector<double> feature_fraction{0.8};
  bool filtering_enabled = true;
  FilterMode filter_mode = FilterMode::kOverlap;
  std::size_t min_filter_size = 6;

  /// Cartesian product in strategy, N, p, r order (r varies fastest).
  /// Seeds are left at 0.
  std::vector<DefenseConfig> points() const;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  VictimConfig victim;
  TriggerConfig trigger;
  /// Fraction of training graphs poisoned for trained victims.
  double poison_rate = 0.15;
  DefenseGrid defense;
  std::uint64_t seed = 0;
  /// Directory receiving report.json, report.csv and report.md; empty
  /// disables writing.
  std::filesystem::path output;
  /// Grid points evaluated in parallel.
  std::size_t concurrency = 1;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Parses the TOML experiment file. Throws ConfigError for syntax errors,
/// unknown sections or keys, and type mismatches; IoError when unreadable.
ExperimentConfig parse_experiment_config(std::string_view toml_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

/// Data, trigger and victim shared by every grid point of one experiment.
struct PreparedExperiment {
  ExperimentConfig config;
  DatasetSplit split;
  /// Trigger with its signature resolved.
  TriggerSpec trigger;
  AttackSet attack;
  std::vector<std::string> warnings;
  std::shared_ptr<const Predictor> victim;
  /// Training accuracy of a trained victim.
  std::optional<double> victim_training_accuracy;
};

/// Loads or generates the dataset, splits it, builds the victim (poisoning
/// its training set when trained) and the attack set. Throws ConfigError,
/// IoError or PredictorError.
PreparedExperiment prepare_experiment(const ExperimentConfig& cfg);

/// The configured trigger with seed and signature resolved as
/// prepare_experiment would.
TriggerSpec resolve_trigger(const ExperimentConfig& cfg);

struct EvalReport {
  std::size_t grid_index = 0;
  DefenseConfig defense;
  double asr_undefended = 0.0;
  double asr_defended = 0.0;
  double acc_undefended = 0.0;
  double acc_defended = 0.0;
  std::size_t n_attack = 0;
  std::size_t n_clean = 0;
  /// Mean upstream queries per defended input.
  double queries_per_input = 0.0;
  /// 100 * (asr_undefended - asr_defended).
  double asr_drop_points = 0.0;
  /// (asr_undefended - asr_defended) / asr_undefended, 0 when undefended
  /// ASR is 0.
  double asr_relative_reduction = 0.0;
  std::vector<GraphRecord> records;
  nlohmann::json config_snapshot;
  double wall_clock_seconds = 0.0;
};

/// Undefended and defended metrics for one defense configuration. The
/// defense seed of graph i is derived from (experiment seed, grid index).
EvalReport evaluate_grid_point(const PreparedExperiment& prepared,
                               const DefenseConfig& defense,
                               std::size_t grid_index);

/// One report per grid point, in grid order. Writes the reports into
/// cfg.output when set.
std::vector<EvalReport> run_experiment(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class ReportFormat { kJson, kCsv, kMarkdown };

ReportFormat parse_report_format(std::string_view text);

/// Wall-clock time is left out unless requested, so identical configs
/// produce identical bytes.
std::string render_report(const std::vector<EvalReport>& reports, ReportFormat format,
                          bool include_wall_clock = false);

/// Writes through a temporary file and rename. Throws IoError.
void emit_report(const std::vector<EvalReport>& reports, ReportFormat format,
                 const std::filesystem::path& path, bool include_wall_clock = false);

nlohmann::json report_to_json(const EvalReport& r, bool include_wall_clock = false);
EvalReport report_from_json(const nlohmann::json& doc);
std::vector<EvalReport> parse_report_json(std::string_view text);

/// Atomic text write. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// ---------------------------------------------------------------------------
// Model resolution
// ---------------------------------------------------------------------------

/// Loads a saved model file: a readout classifier or an oracle spec.
std::unique_ptr<Predictor> load_model_file(const std::filesystem::path& path);

/// "builtin:oracle" builds the oracle described by cfg, an http:// URL a
/// remote client, anything else a model file.
std::shared_ptr<const Predictor> resolve_model(std::string_view spec,
                                               const ExperimentConfig& cfg);

}  // namespace gshield
