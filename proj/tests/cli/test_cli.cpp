#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "stub_upstream.hpp"
#include "test_support.hpp"

#include "gshield/attack.hpp"
#include "gshield/graph_io.hpp"

extern char** environ;

using namespace gshield;
using namespace testing;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

/// Runs the CLI with stderr discarded and returns its exit status and stdout.
Run cli(const std::string& args) {
  const std::string cmd = std::string(GSHIELD_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSmallToml = R"(
[dataset]
graph_count = 40
min_nodes = 12
max_nodes = 18
[victim]
kind = "oracle"
[experiment]
seed = 2
)";

/// A clean graph from the default synthetic corpus, written as JSON.
std::filesystem::path sample_graph(const std::filesystem::path& dir) {
  auto graphs = generate_synthetic(SyntheticSpec{});
  auto path = dir / "g.json";
  write(path, dump_graph_json(graphs.front()));
  return path;
}

}  // namespace

TEST_CASE("help and usage errors") {
  auto help = cli("--help");
  CHECK(help.code == 0);
  CHECK(help.out.find("defend") != std::string::npos);
  CHECK(help.out.find("serve") != std::string::npos);
  CHECK(cli("defend --help").code == 0);
  CHECK(cli("").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("defend --no-such-flag").code == 2);
}

TEST_CASE("defend prints a label and votes") {
  auto dir = scratch_dir("cli_defend");
  auto g = sample_graph(dir);
  auto r = cli("defend --input " + g.string() + " --model builtin:oracle --verbose");
  REQUIRE(r.code == 0);
  auto doc = nlohmann::json::parse(r.out);
  CHECK(doc.at("label").is_number_integer());
  CHECK(doc.at("votes").size() == 2);
  CHECK(doc.at("queries") == 5);
  CHECK(cli("defend --input " + g.string() + " --model builtin:oracle").out ==
        cli("defend --input " + g.string() + " --model builtin:oracle").out);
}

TEST_CASE("exit codes by failure class") {
  auto dir = scratch_dir("cli_codes");
  auto g = sample_graph(dir);
  write(dir / "bad.toml", "[dataset]\nbogus = 3\n");
  write(dir / "grid.toml", "[defense]\nsubgraph_count = [3, 5]\n");
  write(dir / "loop.json", R"({"n":2,"edges":[[0,0]],"features":[[0],[0]]})");

  CHECK(cli("defend --input " + g.string() + " --model builtin:oracle --config " +
            (dir / "bad.toml").string()).code == 2);
  CHECK(cli("defend --input " + g.string() + " --model builtin:oracle --config " +
            (dir / "grid.toml").string()).code == 2);
  CHECK(cli("defend --input " + g.string() + " --model builtin:nope").code == 2);
  CHECK(cli("defend --input " + (dir / "missing.json").string() + " --model builtin:oracle").code == 4);
  CHECK(cli("defend --input " + (dir / "loop.json").string() + " --model builtin:oracle").code == 4);
  CHECK(cli("defend --input " + g.string() + " --model " + (dir / "nomodel.json").string()).code == 4);
  CHECK(cli("eval --config " + (dir / "nothing.toml").string() + " --out " + dir.string()).code == 4);

  StubUpstream broken([](const std::string&, httplib::Response& res) { res.status = 500; });
  CHECK(cli("defend --input " + g.string() + " --model " + broken.url()).code == 3);
}

TEST_CASE("eval writes the three report files") {
  auto dir = scratch_dir("cli_eval");
  write(dir / "cfg.toml", kSmallToml);
  auto r = cli("eval --config " + (dir / "cfg.toml").string() + " --out " + (dir / "out").string() +
               " --timing");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("| Strategy |") != std::string::npos);
  for (const char* f : {"report.json", "report.csv", "report.md", "timing.json"}) {
    CHECK(std::filesystem::exists(dir / "out" / f));
  }
  CHECK(slurp(dir / "out" / "report.md") == r.out);
}

TEST_CASE("dataset generation, training and defending with the trained file") {
  auto dir = scratch_dir("cli_train");
  write(dir / "cfg.toml", kSmallToml);
  const auto cfg = (dir / "cfg.toml").string();
  REQUIRE(cli("attack gen-dataset --config " + cfg + " --out " + (dir / "data").string() +
              " --poison").code == 0);
  auto graphs = load_tu_dataset(dir / "data", "SYNTH");
  CHECK(graphs.size() == 40);

  REQUIRE(cli("train-ref --dataset " + (dir / "data").string() + " --out " +
              (dir / "model.json").string() + " --epochs 50").code == 0);
  auto model = nlohmann::json::parse(slurp(dir / "model.json"));
  CHECK(model.at("kind") == "readout-logistic");

  write(dir / "g.json", dump_graph_json(graphs.front()));
  auto r = cli("defend --input " + (dir / "g.json").string() + " --model " +
               (dir / "model.json").string());
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out).contains("label"));
  CHECK(cli("train-ref --dataset " + (dir / "nope").string() + " --out " +
            (dir / "m2.json").string()).code == 4);
}

TEST_CASE("attack inject adds the trigger edges") {
  auto dir = scratch_dir("cli_inject");
  auto g = sample_graph(dir);
  auto r = cli("attack inject --input " + g.string() + " --seed 4");
  REQUIRE(r.code == 0);
  Graph before = read_graph_file(g);
  Graph after = parse_graph_json(r.out);
  CHECK(after.node_count() == before.node_count());
  CHECK(after.features() != before.features());
  write(dir / "big.toml", "[trigger]\nsize = 500\n");
  CHECK(cli("attack inject --input " + g.string() + " --config " + (dir / "big.toml").string()).code == 2);
}

TEST_CASE("serve answers over HTTP and exits cleanly on SIGTERM") {
  auto dir = scratch_dir("cli_serve");
  auto g = sample_graph(dir);
  const int port = dead_port();
  const std::string port_text = std::to_string(port);
  std::vector<std::string> args{GSHIELD_CLI, "serve", "--port", port_text};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 2, "/dev/null", O_WRONLY, 0);
  REQUIRE(posix_spawn(&pid, GSHIELD_CLI, &actions, nullptr, argv.data(), environ) == 0);
  posix_spawn_file_actions_destroy(&actions);

  httplib::Client client("127.0.0.1", port);
  httplib::Result health;
  for (int i = 0; i < 100 && !health; ++i) {
    health = client.Get("/v1/health");
    if (!health) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  REQUIRE(health);
  CHECK(health->body == R"({"status":"ok","upstream":"ok"})");
  auto res = client.Post("/v1/predict", slurp(g), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(nlohmann::json::parse(res->body).at("queries") == 5);

  ::kill(pid, SIGTERM);
  int status = 0;
  ::waitpid(pid, &status, 0);
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
}
