#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gshield/graph.hpp"

namespace gshield {

// ---------------------------------------------------------------------------
// Native JSON interchange:
//   {"n": int, "edges": [[u,v],...], "features": [[...],...], "label": int|null}
// with 0-based node indices.
// ---------------------------------------------------------------------------

/// Raised for JSON that is not a well-formed graph document. Structural
/// JSON problems use violation "malformed-json"; Graph invariant failures
/// are rethrown as GraphError unchanged.
class GraphJsonError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

nlohmann::json graph_to_json(const Graph& g);

/// Unknown top-level keys are rejected unless listed in `extra_keys`.
Graph graph_from_json(const nlohmann::json& doc,
                      std::initializer_list<std::string_view> extra_keys = {});

Graph parse_graph_json(std::string_view text);
std::string dump_graph_json(const Graph& g);

Graph read_graph_file(const std::filesystem::path& path);
void write_graph_file(const std::filesystem::path& path, const Graph& g);

// ---------------------------------------------------------------------------
// TU benchmark text format.
// ---------------------------------------------------------------------------

class TuParseError : public std::runtime_error {
 public:
  TuParseError(const std::string& file, std::size_t line,
               const std::string& what)
      : std::runtime_error(file + (line ? ":" + std::to_string(line) : "") +
                           ": " + what),
        file_(file),
        line_(line) {}
  const std::string& file() const { return file_; }
  /// 1-based line number, 0 when the error concerns the whole file.
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Loads NAME_A.txt, NAME_graph_indicator.txt, NAME_graph_labels.txt and
/// node features from NAME_node_attributes.txt, else a one-hot encoding of
/// NAME_node_labels.txt, else a single node-degree column. Graph labels are
/// remapped to 0..C-1 in ascending order of the raw label values.
std::vector<Graph> load_tu_dataset(const std::filesystem::path& directory,
                                   const std::string& name);

/// Writes the graphs as NAME_A.txt, NAME_graph_indicator.txt,
/// NAME_graph_labels.txt and NAME_node_attributes.txt. Unlabeled graphs
/// are written with label 0.
void save_tu_dataset(const std::filesystem::path& directory,
                     const std::string& name, const std::vector<Graph>& graphs);

// ---------------------------------------------------------------------------

struct DatasetSplit {
  std::vector<Graph> train;
  std::vector<Graph> test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Seeded shuffle; the first floor(train_fraction * total) graphs train.
/// Throws std::invalid_argument for fewer than 2 graphs or a fraction
/// outside (0, 1).
DatasetSplit split_dataset(const std::vector<Graph>& graphs,
                           double train_fraction, std::uint64_t seed);

/// floor(x) tolerant of representation error, e.g. 0.3 * 10 -> 3.
std::size_t robust_floor(double x);
/// ceil(x) tolerant of representation error, e.g. 0.7 * 10 -> 7.
std::size_t robust_ceil(double x);

}  // namespace gshield
