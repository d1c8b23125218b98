#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "gshield/graph_io.hpp"
#include "gshield/rng.hpp"

namespace gshield {

namespace fs = std::filesystem;

namespace {

struct LineFile {
  std::string display_name;
  std::vector<std::string> lines;
};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

LineFile read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw TuParseError(path.filename().string(), 0, "cannot open file");
  }
  LineFile f{path.filename().string(), {}};
  std::string line;
  while (std::getline(in, line)) f.lines.push_back(trim(line));
  // Trailing blank lines are not records.
  while (!f.lines.empty() && f.lines.back().empty()) f.lines.pop_back();
  return f;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto comma = s.find(',', start);
    parts.push_back(s.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

long long parse_int(const LineFile& f, std::size_t line_no,
                    std::string_view token) {
  std::string t = trim(token);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw TuParseError(f.display_name, line_no,
                       "expected integer, got '" + t + "'");
  }
  return value;
}

double parse_real(const LineFile& f, std::size_t line_no,
                  std::string_view token) {
  std::string t = trim(token);
  char* end = nullptr;
  double value = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(value)) {
    throw TuParseError(f.display_name, line_no,
                       "expected finite real, got '" + t + "'");
  }
  return value;
}

}  // namespace

std::vector<Graph> load_tu_dataset(const fs::path& directory,
                                   const std::string& name) {
  auto file = [&](const char* suffix) {
    return directory / (name + "_" + suffix + ".txt");
  };
  for (const char* mandatory : {"A", "graph_indicator", "graph_labels"}) {
    if (!fs::exists(file(mandatory))) {
      throw TuParseError(file(mandatory).filename().string(), 0,
                         "missing mandatory file");
    }
  }

  LineFile indicator = read_lines(file("graph_indicator"));
  const std::size_t total_nodes = indicator.lines.size();
  std::vector<std::size_t> graph_of(total_nodes);
  std::size_t graph_count = 0;
  for (std::size_t i = 0; i < total_nodes; ++i) {
    long long id = parse_int(indicator, i + 1, indicator.lines[i]);
    if (id < 1) {
      throw TuParseError(indicator.display_name, i + 1,
                         "graph id must be >= 1");
    }
    graph_of[i] = static_cast<std::size_t>(id - 1);
    graph_count = std::max(graph_count, graph_of[i] + 1);
  }

  LineFile labels_file = read_lines(file("graph_labels"));
  if (labels_file.lines.size() != graph_count) {
    throw TuParseError(labels_file.display_name, 0,
                       "expected " + std::to_string(graph_count) +
                           " graph labels, found " +
                           std::to_string(labels_file.lines.size()));
  }
  std::vector<long long> raw_labels(graph_count);
  std::set<long long> distinct_labels;
  for (std::size_t g = 0; g < graph_count; ++g) {
    raw_labels[g] = parse_int(labels_file, g + 1, labels_file.lines[g]);
    distinct_labels.insert(raw_labels[g]);
  }
  std::map<long long, int> label_index;
  for (long long l : distinct_labels) {
    label_index.emplace(l, static_cast<int>(label_index.size()));
  }

  // Local index of each global node within its graph.
  std::vector<std::size_t> local(total_nodes);
  std::vector<std::size_t> sizes(graph_count, 0);
  for (std::size_t i = 0; i < total_nodes; ++i) local[i] = sizes[graph_of[i]]++;

  std::vector<std::vector<Edge>> edges(graph_count);
  LineFile a = read_lines(file("A"));
  for (std::size_t k = 0; k < a.lines.size(); ++k) {
    if (a.lines[k].empty()) continue;
    auto parts = split_commas(a.lines[k]);
    if (parts.size() != 2) {
      throw TuParseError(a.display_name, k + 1, "expected 'u, v'");
    }
    long long u = parse_int(a, k + 1, parts[0]);
    long long v = parse_int(a, k + 1, parts[1]);
    if (u < 1 || v < 1 || static_cast<std::size_t>(u) > total_nodes ||
        static_cast<std::size_t>(v) > total_nodes) {
      throw TuParseError(a.display_name, k + 1,
                         "edge references unknown node");
    }
    std::size_t gu = static_cast<std::size_t>(u - 1);
    std::size_t gv = static_cast<std::size_t>(v - 1);
    if (graph_of[gu] != graph_of[gv]) {
      throw TuParseError(a.display_name, k + 1,
                         "edge references node outside its graph");
    }
    if (gu == gv) continue;  // simple graphs only
    edges[graph_of[gu]].push_back({local[gu], local[gv]});
  }

  // Features: attributes, else one-hot node labels, else degree.
  std::vector<std::vector<double>> node_features(total_nodes);
  bool degree_features = false;
  if (fs::exists(file("node_attributes"))) {
    LineFile attrs = read_lines(file("node_attributes"));
    if (attrs.lines.size() != total_nodes) {
      throw TuParseError(attrs.display_name, 0,
                         "expected " + std::to_string(total_nodes) +
                             " attribute lines, found " +
                             std::to_string(attrs.lines.size()));
    }
    std::size_t width = 0;
    for (std::size_t i = 0; i < total_nodes; ++i) {
      auto parts = split_commas(attrs.lines[i]);
      if (i == 0) width = parts.size();
      if (parts.size() != width) {
        throw TuParseError(attrs.display_name, i + 1,
                           "inconsistent attribute count");
      }
      for (auto p : parts) node_features[i].push_back(parse_real(attrs, i + 1, p));
    }
  } else if (fs::exists(file("node_labels"))) {
    LineFile nl = read_lines(file("node_labels"));
    if (nl.lines.size() != total_nodes) {
      throw TuParseError(nl.display_name, 0,
                         "expected " + std::to_string(total_nodes) +
                             " node labels, found " +
                             std::to_string(nl.lines.size()));
    }
    std::vector<long long> raw(total_nodes);
    std::set<long long> distinct;
    for (std::size_t i = 0; i < total_nodes; ++i) {
      raw[i] = parse_int(nl, i + 1, nl.lines[i]);
      distinct.insert(raw[i]);
    }
    std::map<long long, std::size_t> column;
    for (long long l : distinct) column.emplace(l, column.size());
    for (std::size_t i = 0; i < total_nodes; ++i) {
      node_features[i].assign(column.size(), 0.0);
      node_features[i][column[raw[i]]] = 1.0;
    }
  } else {
    degree_features = true;
  }

  std::vector<std::vector<NodeId>> members(graph_count);
  for (std::size_t i = 0; i < total_nodes; ++i) members[graph_of[i]].push_back(i);

  std::vector<Graph> graphs;
  graphs.reserve(graph_count);
  for (std::size_t g = 0; g < graph_count; ++g) {
    std::vector<std::vector<double>> rows;
    rows.reserve(members[g].size());
    for (auto global : members[g]) rows.push_back(node_features[global]);
    int label = label_index.at(raw_labels[g]);
    if (degree_features) {
      Graph topo = Graph::build(sizes[g], edges[g], DenseMatrix(sizes[g], 0));
      DenseMatrix deg(sizes[g], 1);
      for (std::size_t i = 0; i < sizes[g]; ++i) {
        deg(i, 0) = static_cast<double>(topo.degree(i));
      }
      graphs.push_back(Graph::build(sizes[g], edges[g], std::move(deg), label));
    } else {
      graphs.push_back(Graph::build(sizes[g], std::move(edges[g]), rows, label));
    }
  }
  return graphs;
}

void save_tu_dataset(const fs::path& directory, const std::string& name,
                     const std::vector<Graph>& graphs) {
  fs::create_directories(directory);
  auto open = [&](const char* suffix) {
    auto path = directory / (name + "_" + suffix + ".txt");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
  };
  auto a = open("A");
  auto indicator = open("graph_indicator");
  auto labels = open("graph_labels");
  bool has_attributes =
      std::any_of(graphs.begin(), graphs.end(),
                  [](const Graph& g) { return g.feature_dim() > 0; });
  std::ofstream attrs;
  if (has_attributes) attrs = open("node_attributes");

  std::size_t offset = 1;
  char buf[32];
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    for (const auto& e : g.edges()) {
      a << offset + e.u << ", " << offset + e.v << '\n';
      a << offset + e.v << ", " << offset + e.u << '\n';
    }
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      indicator << gi + 1 << '\n';
      if (has_attributes) {
        auto row = g.feature_row(i);
        for (std::size_t c = 0; c < row.size(); ++c) {
          std::snprintf(buf, sizeof buf, "%.17g", row[c]);
          attrs << (c ? ", " : "") << buf;
        }
        attrs << '\n';
      }
    }
    labels << g.label().value_or(0) << '\n';
    offset += g.node_count();
  }
}

DatasetSplit split_dataset(const std::vector<Graph>& graphs,
                           double train_fraction, std::uint64_t seed) {
  if (graphs.size() < 2) {
    throw std::invalid_argument("split_dataset: need at least 2 graphs");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split_dataset: fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(graphs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, stream::kSplit));
  rng.shuffle(order);

  std::size_t n_train = robust_floor(train_fraction * graphs.size());
  DatasetSplit split;
  split.train_indices.assign(order.begin(), order.begin() + n_train);
  split.test_indices.assign(order.begin() + n_train, order.end());
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  for (auto i : split.train_indices) split.train.push_back(graphs[i]);
  for (auto i : split.test_indices) split.test.push_back(graphs[i]);
  return split;
}

}  // namespace gshield
