#include <charconv>
#include <cstdio>
#include <fstream>

#include "gshield/eval.hpp"

namespace gshield {

namespace {

/// Shortest representation that parses back to the same double.
std::string shortest(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  return buf;
}

std::string_view to_string(RecordKind k) { return k == RecordKind::kAttack ? "attack" : "clean"; }

nlohmann::json record_to_json(const GraphRecord& r) {
  return {{"graph_id", r.graph_id},
          {"kind", to_string(r.kind)},
          {"true_label", r.true_label},
          {"undefended_label", r.undefended_label},
          {"defended_label", r.defended_label},
          {"queries", r.queries}};
}

GraphRecord record_from_json(const nlohmann::json& doc) {
  GraphRecord r;
  r.graph_id = doc.at("graph_id").get<std::size_t>();
  const auto kind = doc.at("kind").get<std::string>();
  if (kind != "clean" && kind != "attack") throw std::invalid_argument("bad record kind " + kind);
  r.kind = kind == "attack" ? RecordKind::kAttack : RecordKind::kClean;
  r.true_label = doc.at("true_label").get<int>();
  r.undefended_label = doc.at("undefended_label").get<int>();
  r.defended_label = doc.at("defended_label").get<int>();
  r.queries = doc.at("queries").get<std::size_t>();
  return r;
}

std::string render_csv(const std::vector<EvalReport>& reports, bool wall_clock) {
  std::string out =
      "strategy,N,p,r,asr_undefended,asr_defended,acc_undefended,acc_defended,"
      "queries_per_input,asr_drop_points,asr_relative_reduction";
  out += wall_clock ? ",wall_clock_seconds\n" : "\n";
  for (const auto& r : reports) {
    const std::string cells[] = {std::string(to_string(r.defense.strategy)),
                                 std::to_string(r.defense.subgraph_count),
                                 shortest(r.defense.sample_rate),
                                 shortest(r.defense.feature_fraction),
                                 shortest(r.asr_undefended),
                                 shortest(r.asr_defended),
                                 shortest(r.acc_undefended),
                                 shortest(r.acc_defended),
                                 shortest(r.queries_per_input),
                                 shortest(r.asr_drop_points),
                                 shortest(r.asr_relative_reduction)};
    for (std::size_t i = 0; i < std::size(cells); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    if (wall_clock) out += "," + shortest(r.wall_clock_seconds);
    out += '\n';
  }
  return out;
}

std::string render_markdown(const std::vector<EvalReport>& reports, bool wall_clock) {
  std::string out =
      "| Strategy | N | p | r | ASR% undefended | ASR% defended | ACC% undefended | "
      "ACC% defended | Queries/input |";
  std::string rule = "|---|---:|---:|---:|---:|---:|---:|---:|---:|";
  if (wall_clock) {
    out += " Seconds |";
    rule += "---:|";
  }
  out += "\n" + rule + "\n";
  for (const auto& r : reports) {
    char qpi[32];
    std::snprintf(qpi, sizeof qpi, "%.1f", r.queries_per_input);
    out += "| " + std::string(to_string(r.defense.strategy)) + " | " +
           std::to_string(r.defense.subgraph_count) + " | " + shortest(r.defense.sample_rate) +
           " | " + shortest(r.defense.feature_fraction) + " | " + percent(r.asr_undefended) +
           " | " + percent(r.asr_defended) + " | " + percent(r.acc_undefended) + " | " +
           percent(r.acc_defended) + " | " + qpi + " |";
    if (wall_clock) {
      char s[32];
      std::snprintf(s, sizeof s, "%.2f", r.wall_clock_seconds);
      out += std::string(" ") + s + " |";
    }
    out += '\n';
  }
  return out;
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::kJson;
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "markdown" || text == "md") return ReportFormat::kMarkdown;
  throw std::invalid_argument("report format must be json, csv or markdown");
}

nlohmann::json report_to_json(const EvalReport& r, bool include_wall_clock) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& rec : r.records) records.push_back(record_to_json(rec));
  nlohmann::json doc = {{"grid_index", r.grid_index},
                        {"strategy", to_string(r.defense.strategy)},
                        {"N", r.defense.subgraph_count},
                        {"p", r.defense.sample_rate},
                        {"r", r.defense.feature_fraction},
                        {"asr_undefended", r.asr_undefended},
                        {"asr_defended", r.asr_defended},
                        {"acc_undefended", r.acc_undefended},
                        {"acc_defended", r.acc_defended},
                        {"queries_per_input", r.queries_per_input},
                        {"asr_drop_points", r.asr_drop_points},
                        {"asr_relative_reduction", r.asr_relative_reduction},
                        {"n_attack", r.n_attack},
                        {"n_clean", r.n_clean},
                        {"defense", r.defense.to_json()},
                        {"records", records},
                        {"config", r.config_snapshot}};
  if (include_wall_clock) doc["wall_clock_seconds"] = r.wall_clock_seconds;
  return doc;
}

EvalReport report_from_json(const nlohmann::json& doc) {
  EvalReport r;
  r.grid_index = doc.at("grid_index").get<std::size_t>();
  r.defense = DefenseConfig::from_json(doc.at("defense"));
  r.asr_undefended = doc.at("asr_undefended").get<double>();
  r.asr_defended = doc.at("asr_defended").get<double>();
  r.acc_undefended = doc.at("acc_undefended").get<double>();
  r.acc_defended = doc.at("acc_defended").get<double>();
  r.queries_per_input = doc.at("queries_per_input").get<double>();
  r.asr_drop_points = doc.at("asr_drop_points").get<double>();
  r.asr_relative_reduction = doc.at("asr_relative_reduction").get<double>();
  r.n_attack = doc.at("n_attack").get<std::size_t>();
  r.n_clean = doc.at("n_clean").get<std::size_t>();
  for (const auto& rec : doc.at("records")) r.records.push_back(record_from_json(rec));
  r.config_snapshot = doc.at("config");
  r.wall_clock_seconds = doc.value("wall_clock_seconds", 0.0);
  return r;
}

std::vector<EvalReport> parse_report_json(std::string_view text) {
  const auto doc = nlohmann::json::parse(text);
  std::vector<EvalReport> out;
  for (const auto& item : doc.at("reports")) out.push_back(report_from_json(item));
  return out;
}

std::string render_report(const std::vector<EvalReport>& reports, ReportFormat format,
                          bool include_wall_clock) {
  switch (format) {
    case ReportFormat::kJson: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : reports) arr.push_back(report_to_json(r, include_wall_clock));
      return nlohmann::json{{"reports", arr}}.dump(2) + "\n";
    }
    case ReportFormat::kCsv:
      return render_csv(reports, include_wall_clock);
    case ReportFormat::kMarkdown:
      return render_markdown(reports, include_wall_clock);
  }
  return {};
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

void emit_report(const std::vector<EvalReport>& reports, ReportFormat format,
                 const std::filesystem::path& path, bool include_wall_clock) {
  write_file_atomic(path, render_report(reports, format, include_wall_clock));
}

}  // namespace gshield
