#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "textxai/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace textxai {

namespace {

constexpr const char* kEmpty = "—";

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> value() const { return n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt; }
};

using FaithKey = std::pair<ExplainerId, std::size_t>;
using PlausKey = std::tuple<ExplainerId, std::size_t, ApproachId, std::string>;

std::map<FaithKey, Mean> faithfulness_means(const RunReport& report) {
  // Disc+ is shared by every approach of a (video, explainer, k); count it once.
  std::set<std::tuple<std::string, ExplainerId, std::size_t>> seen;
  std::map<FaithKey, Mean> out;
  for (const auto& r : report.records) {
    if (!r.disc_plus || !seen.emplace(r.video_id, r.explainer, r.k).second) continue;
    out[{r.explainer, r.k}].add(*r.disc_plus);
  }
  return out;
}

std::map<PlausKey, Mean> plausibility_means(const RunReport& report) {
  std::map<PlausKey, Mean> out;
  for (const auto& r : report.records) {
    for (const auto& [emb, v] : r.plausibility) out[{r.explainer, r.k, r.approach, emb}].add(v);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string approach_label(ApproachId a) {
  switch (a) {
    case ApproachId::approach1: return "Approach 1";
    case ApproachId::approach2: return "Approach 2";
    case ApproachId::not_applicable: break;
  }
  return "n/a";
}

// Renders one row; cells in the same group compete for bold.
std::string render_row(const std::string& label, const std::vector<std::optional<double>>& cells,
                       const std::vector<std::size_t>& group, bool lower_is_better) {
  std::map<std::size_t, double> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i]) continue;
    auto [it, fresh] = best.emplace(group[i], *cells[i]);
    if (!fresh) it->second = lower_is_better ? std::min(it->second, *cells[i]) : std::max(it->second, *cells[i]);
  }
  std::string line = "| " + label + " |";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i]) {
      line += std::string(" ") + kEmpty + " |";
    } else if (*cells[i] == best.at(group[i])) {
      line += " **" + fmt(*cells[i]) + "** |";
    } else {
      line += " " + fmt(*cells[i]) + " |";
    }
  }
  return line + "\n";
}

}  // namespace

std::string render_tables(const RunReport& report) {
  std::ostringstream out;
  out << "# Evaluation report: " << report.dataset_id << "\n\n";
  out << "- Videos with at least " << report.min_topk_fragments << " fragment(s): " << report.videos.size()
      << " evaluated, " << report.excluded.size() << " excluded, " << report.quarantined.size() << " quarantined\n";
  for (const auto& [v, f] : report.excluded) out << "  - excluded: " << v << " (" << f << " fragments)\n";
  for (const auto& q : report.quarantined) out << "  - quarantined: " << q.video_id << "\n";
  out << "- Dataset scores are plain means over videos\n";
  out << "- Seed " << report.seed << ", config digest " << report.config_digest << "\n\n";

  const auto faith = faithfulness_means(report);
  out << "## Faithfulness (Disc+, lower is better)\n\n";
  if (report.explainers.empty() || report.k.empty()) {
    out << kEmpty << "\n\n";
  } else {
    for (const auto k : report.k) {
      out << "### Top-" << k << " explanations\n\n| Dataset |";
      for (auto e : report.explainers) out << " " << to_string(e) << " |";
      out << "\n|---|";
      for (std::size_t i = 0; i < report.explainers.size(); ++i) out << "---|";
      out << "\n";
      std::vector<std::optional<double>> cells;
      for (auto e : report.explainers) {
        auto it = faith.find({e, k});
        cells.push_back(it == faith.end() ? std::nullopt : it->second.value());
      }
      out << render_row(report.dataset_id, cells, std::vector<std::size_t>(cells.size(), 0), true) << "\n";
    }
  }

  const auto plaus = plausibility_means(report);
  out << "## Plausibility (cosine similarity, higher is better)\n\n";
  if (report.explainers.empty() || report.k.empty() || report.approaches.empty() || report.embedders.empty()) {
    out << kEmpty << "\n";
    return out.str();
  }
  for (const auto k : report.k) {
    out << "### Top-" << k << " explanations\n\n| Dataset - Approach |";
    for (auto e : report.explainers) {
      for (const auto& emb : report.embedders) out << " " << to_string(e) << " / " << emb << " |";
    }
    out << "\n|---|";
    for (std::size_t i = 0; i < report.explainers.size() * report.embedders.size(); ++i) out << "---|";
    out << "\n";
    for (auto a : report.approaches) {
      std::vector<std::optional<double>> cells;
      std::vector<std::size_t> group;
      for (auto e : report.explainers) {
        for (std::size_t m = 0; m < report.embedders.size(); ++m) {
          auto it = plaus.find({e, k, a, report.embedders[m]});
          cells.push_back(it == plaus.end() ? std::nullopt : it->second.value());
          group.push_back(m);
        }
      }
      out << render_row(report.dataset_id + " - " + approach_label(a), cells, group, false);
    }
    out << "\n";
  }
  return out.str();
}

json report_json(const RunReport& report) {
  json j;
  j["dataset_id"] = report.dataset_id;
  j["config_digest"] = report.config_digest;
  j["seed"] = report.seed;
  j["video_set_min_fragments"] = report.min_topk_fragments;
  j["aggregation"] = "plain mean over videos";
  json explainers = json::array(), approaches = json::array();
  for (auto e : report.explainers) explainers.push_back(to_string(e));
  for (auto a : report.approaches) approaches.push_back(to_string(a));
  j["explainers"] = explainers;
  j["k"] = report.k;
  j["approaches"] = approaches;
  j["embedders"] = report.embedders;
  j["videos"] = report.videos;
  j["excluded"] = json::array();
  for (const auto& [v, f] : report.excluded) j["excluded"].push_back({{"video_id", v}, {"fragments", f}});
  j["quarantined"] = json::array();
  for (const auto& q : report.quarantined) j["quarantined"].push_back({{"video_id", q.video_id}, {"error", q.error}});

  j["faithfulness"] = json::array();
  for (const auto& [key, m] : faithfulness_means(report)) {
    j["faithfulness"].push_back(
        {{"explainer_id", to_string(key.first)}, {"k", key.second}, {"mean_disc_plus", *m.value()}, {"videos", m.n}});
  }
  j["plausibility"] = json::array();
  for (const auto& [key, m] : plausibility_means(report)) {
    const auto& [e, k, a, emb] = key;
    j["plausibility"].push_back({{"explainer_id", to_string(e)},
                                 {"k", k},
                                 {"approach_id", to_string(a)},
                                 {"embedder_id", emb},
                                 {"mean_plausibility", *m.value()},
                                 {"videos", m.n}});
  }
  return j;
}

void write_report(const RunReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "records.jsonl", std::ios::binary | std::ios::trunc);
    for (const auto& r : report.records) out << json(r).dump() << '\n';
  }
  {
    std::ofstream out(dir / "tables.md", std::ios::binary | std::ios::trunc);
    out << render_tables(report);
  }
  std::ofstream out(dir / "report.json", std::ios::binary | std::ios::trunc);
  out << report_json(report).dump(2) << '\n';
}

void write_texts(const RunReport& report, const fs::path& dir) {
  fs::create_directories(dir / "texts");
  for (const auto& res : report.results) {
    if (res.texts.empty()) continue;
    std::ofstream out(dir / "texts" / (res.video_id + ".jsonl"), std::ios::binary | std::ios::trunc);
    for (const auto& t : res.texts) out << t.dump() << '\n';
  }
}

std::vector<EvaluationRecord> read_records(const fs::path& records_jsonl) {
  std::ifstream in(records_jsonl);
  if (!in) throw Error(ErrorKind::invalid_input, "cannot read " + records_jsonl.string());
  std::vector<EvaluationRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorKind::invalid_input, records_jsonl.string() + ":" + std::to_string(lineno) + ": invalid JSON");
    }
    auto r = j.get<EvaluationRecord>();
    r.validate();
    records.push_back(std::move(r));
  }
  return records;
}

RunReport read_report(const fs::path& dir) {
  std::ifstream in(dir / "report.json");
  if (!in) throw Error(ErrorKind::invalid_input, "cannot read " + (dir / "report.json").string());
  const json j = json::parse(in);
  RunReport r;
  r.dataset_id = j.at("dataset_id").get<std::string>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.min_topk_fragments = j.at("video_set_min_fragments").get<std::size_t>();
  for (const auto& e : j.at("explainers")) r.explainers.push_back(explainer_from_string(e.get<std::string>()));
  r.k = j.at("k").get<std::vector<std::size_t>>();
  for (const auto& a : j.at("approaches")) r.approaches.push_back(approach_from_string(a.get<std::string>()));
  r.embedders = j.at("embedders").get<std::vector<std::string>>();
  r.videos = j.at("videos").get<std::vector<std::string>>();
  for (const auto& x : j.at("excluded")) r.excluded.emplace_back(x.at("video_id"), x.at("fragments"));
  for (const auto& x : j.at("quarantined")) r.quarantined.push_back({x.at("video_id"), x.at("error")});
  r.records = read_records(dir / "records.jsonl");
  return r;
}

}  // namespace textxai
