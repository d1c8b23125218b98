#include <fstream>

#include "doctest.h"
#include "test_support.hpp"

#include "gshield/attack.hpp"
#include "gshield/graph_io.hpp"

using namespace gshield;
using namespace testing;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// A valid two-graph dataset with one file optionally replaced.
fs::path broken_dataset(const std::string& tag, const std::string& file, const std::string& text) {
  auto dir = scratch_dir("tu_" + tag);
  write(dir / "X_A.txt", "1, 2\n2, 1\n3, 4\n4, 3\n");
  write(dir / "X_graph_indicator.txt", "1\n1\n2\n2\n");
  write(dir / "X_graph_labels.txt", "0\n1\n");
  write(dir / "X_node_attributes.txt", "1.0\n2.0\n3.0\n4.0\n");
  if (!file.empty()) write(dir / ("X_" + file + ".txt"), text);
  return dir;
}

TuParseError parse_error(const fs::path& dir) {
  try {
    load_tu_dataset(dir, "X");
  } catch (const TuParseError& e) {
    return e;
  }
  FAIL("expected a parse error");
  return TuParseError("", 0, "");
}

}  // namespace

TEST_CASE("two-graph toy fixture") {
  auto graphs = load_tu_dataset(fixtures() / "tu" / "toy", "TOY");
  REQUIRE(graphs.size() == 2);
  CHECK(graphs[0].node_count() == 3);
  CHECK(graphs[0].edge_count() == 3);
  CHECK(graphs[1].node_count() == 2);
  CHECK(graphs[1].edge_count() == 1);
  // Raw labels {1, -1} are remapped in ascending order.
  CHECK(graphs[0].label() == 1);
  CHECK(graphs[1].label() == 0);
  CHECK(graphs[0].feature_dim() == 2);
  CHECK(graphs[0].feature_row(1)[0] == -1.25);
  CHECK(graphs[1].feature_row(0)[0] == 1e-3);
  CHECK(graphs[1].feature_row(1)[1] == -8.0);
}

TEST_CASE("node labels become one-hot features") {
  auto graphs = load_tu_dataset(fixtures() / "tu" / "labels", "LBL");
  REQUIRE(graphs.size() == 2);
  CHECK(graphs[0].feature_dim() == 2);
  CHECK(graphs[0].feature_row(0)[0] == 1.0);
  CHECK(graphs[0].feature_row(0)[1] == 0.0);
  CHECK(graphs[0].feature_row(1)[0] == 0.0);
  CHECK(graphs[0].feature_row(1)[1] == 1.0);
  CHECK(graphs[1].node_count() == 1);
}

TEST_CASE("without attributes or node labels the feature is the degree") {
  auto graphs = load_tu_dataset(fixtures() / "tu" / "degree", "DEG");
  REQUIRE(graphs.size() == 1);
  CHECK(graphs[0].feature_dim() == 1);
  CHECK(graphs[0].feature_row(0)[0] == 1.0);
  CHECK(graphs[0].feature_row(1)[0] == 2.0);
  CHECK(graphs[0].feature_row(2)[0] == 1.0);
  CHECK(graphs[0].label() == 0);
}

TEST_CASE("parse errors cite file and line") {
  {
    auto dir = broken_dataset("missing", "", "");
    fs::remove(dir / "X_graph_labels.txt");
    auto e = parse_error(dir);
    CHECK(e.file() == "X_graph_labels.txt");
  }
  {
    auto e = parse_error(broken_dataset("cross", "A", "1, 2\n2, 3\n"));
    CHECK(e.file() == "X_A.txt");
    CHECK(e.line() == 2);
  }
  {
    auto e = parse_error(broken_dataset("range", "A", "1, 9\n"));
    CHECK(e.file() == "X_A.txt");
    CHECK(e.line() == 1);
  }
  {
    auto e = parse_error(broken_dataset("labels", "graph_labels", "0\n"));
    CHECK(e.file() == "X_graph_labels.txt");
  }
  {
    auto e = parse_error(broken_dataset("attrs", "node_attributes", "1.0\n2.0\nabc\n4.0\n"));
    CHECK(e.file() == "X_node_attributes.txt");
    CHECK(e.line() == 3);
  }
  {
    auto e = parse_error(broken_dataset("attrcount", "node_attributes", "1.0\n2.0\n"));
    CHECK(e.file() == "X_node_attributes.txt");
  }
  {
    auto e = parse_error(broken_dataset("indicator", "graph_indicator", "1\n1\nx\n2\n"));
    CHECK(e.file() == "X_graph_indicator.txt");
    CHECK(e.line() == 3);
  }
}

TEST_CASE("self-loops in the edge list are dropped") {
  auto dir = broken_dataset("loops", "A", "1, 1\n1, 2\n2, 1\n3, 4\n");
  auto graphs = load_tu_dataset(dir, "X");
  CHECK(graphs[0].edge_count() == 1);
}

TEST_CASE("TU parse, serialize, parse is the identity") {
  for (auto [dir, name] : {std::pair{"toy", "TOY"}, {"labels", "LBL"}, {"degree", "DEG"}}) {
    auto first = load_tu_dataset(fixtures() / "tu" / dir, name);
    auto out = scratch_dir(std::string("roundtrip_") + dir);
    save_tu_dataset(out, name, first);
    auto second = load_tu_dataset(out, name);
    REQUIRE(second.size() == first.size());
    for (std::size_t i = 0; i < first.size(); ++i) CHECK(second[i] == first[i]);
  }
}

TEST_CASE("synthetic corpus survives a TU round-trip bit for bit") {
  SyntheticSpec spec;
  spec.graph_count = 20;
  spec.seed = 4;
  auto graphs = generate_synthetic(spec);
  auto out = scratch_dir("roundtrip_synth");
  save_tu_dataset(out, "S", graphs);
  auto back = load_tu_dataset(out, "S");
  REQUIRE(back.size() == graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) CHECK(back[i] == graphs[i]);
}
