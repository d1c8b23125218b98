#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gshield/graph_io.hpp"

namespace gshield {

using nlohmann::json;

json graph_to_json(const Graph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({e.u, e.v});
  json features = json::array();
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    auto row = g.feature_row(i);
    features.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json doc;
  doc["n"] = g.node_count();
  doc["edges"] = std::move(edges);
  doc["features"] = std::move(features);
  doc["label"] = g.label() ? json(*g.label()) : json(nullptr);
  return doc;
}

namespace {

std::size_t as_index(const json& v, const char* what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw GraphJsonError(std::string("malformed-json: ") + what +
                         " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

Graph graph_from_json(const json& doc,
                      std::initializer_list<std::string_view> extra_keys) {
  if (!doc.is_object()) {
    throw GraphJsonError("malformed-json: graph document must be an object");
  }
  for (const auto& [key, _] : doc.items()) {
    bool known = key == "n" || key == "edges" || key == "features" ||
                 key == "label" ||
                 std::find(extra_keys.begin(), extra_keys.end(), key) !=
                     extra_keys.end();
    if (!known) {
      throw GraphJsonError("unknown-field: " + key);
    }
  }
  if (!doc.contains("n")) throw GraphJsonError("malformed-json: missing n");
  std::size_t n = as_index(doc["n"], "n");

  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    const auto& je = doc["edges"];
    if (!je.is_array()) {
      throw GraphJsonError("malformed-json: edges must be an array");
    }
    edges.reserve(je.size());
    for (const auto& pair : je) {
      if (!pair.is_array() || pair.size() != 2) {
        throw GraphJsonError("malformed-json: each edge must be [u, v]");
      }
      edges.push_back({as_index(pair[0], "edge endpoint"),
                       as_index(pair[1], "edge endpoint")});
    }
  }

  std::vector<std::vector<double>> rows;
  if (doc.contains("features")) {
    const auto& jf = doc["features"];
    if (!jf.is_array()) {
      throw GraphJsonError("malformed-json: features must be an array");
    }
    rows.reserve(jf.size());
    for (const auto& row : jf) {
      if (!row.is_array()) {
        throw GraphJsonError("malformed-json: feature rows must be arrays");
      }
      std::vector<double> r;
      r.reserve(row.size());
      for (const auto& x : row) {
        if (!x.is_number()) {
          throw GraphJsonError("malformed-json: features must be numbers");
        }
        r.push_back(x.get<double>());
      }
      rows.push_back(std::move(r));
    }
  }

  std::optional<int> label;
  if (doc.contains("label") && !doc["label"].is_null()) {
    if (!doc["label"].is_number_integer()) {
      throw GraphJsonError("malformed-json: label must be an integer or null");
    }
    label = doc["label"].get<int>();
  }
  return Graph::build(n, std::move(edges), rows, label);
}

Graph parse_graph_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw GraphJsonError(std::string("malformed-json: ") + e.what());
  }
  return graph_from_json(doc);
}

std::string dump_graph_json(const Graph& g) { return graph_to_json(g).dump(); }

Graph read_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_graph_json(ss.str());
}

void write_graph_file(const std::filesystem::path& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << graph_to_json(g).dump(2) << '\n';
}

std::size_t robust_floor(double x) {
  return static_cast<std::size_t>(std::floor(x + 1e-9));
}

std::size_t robust_ceil(double x) {
  double c = std::ceil(x - 1e-9);
  return c <= 0.0 ? 0 : static_cast<std::size_t>(c);
}

}  // namespace gshield
