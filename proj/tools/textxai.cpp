#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "textxai/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> k;
  std::vector<std::string> approaches;
  std::vector<std::string> explainers;
  std::optional<std::size_t> video_set;
  std::vector<std::string> videos;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override the run seed");
  cmd->add_option("--k", o.k, "Override explanation sizes, e.g. --k 1 3");
  cmd->add_option("--approach", o.approaches, "approach1 / approach2 (or 1 / 2)");
  cmd->add_option("--explainer", o.explainers, "attention / lime / random");
  cmd->add_option("--video-set", o.video_set, "Minimum fragment count (1 = Video Set 1, 3 = Video Set 2)");
  cmd->add_option("--video", o.videos, "Restrict to these video keys");
  cmd->add_option("-o,--out", o.out, "Output directory");
  cmd->add_option("-j,--workers", o.workers, "Videos processed in parallel");
}

textxai::RunConfig resolve_config(const Overrides& o) {
  textxai::RunConfig c = textxai::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.k.empty()) c.k = o.k;
  if (!o.approaches.empty()) {
    c.approaches.clear();
    for (const auto& a : o.approaches) c.approaches.push_back(textxai::approach_from_string(a));
  }
  if (!o.explainers.empty()) {
    c.explainers.clear();
    for (const auto& e : o.explainers) c.explainers.push_back(textxai::explainer_from_string(e));
  }
  if (o.video_set) c.min_topk_fragments = *o.video_set;
  if (!o.videos.empty()) c.videos = o.videos;
  if (o.out) c.output_dir = *o.out;
  if (o.workers) c.workers = *o.workers;
  std::sort(c.k.begin(), c.k.end());
  c.k.erase(std::unique(c.k.begin(), c.k.end()), c.k.end());
  c.validate();
  return c;
}

void write_lines(const fs::path& path, const std::vector<nlohmann::json>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& l : lines) out << l.dump() << '\n';
}

int run_stage(const Overrides& o, textxai::Stage stage) {
  const textxai::RunConfig config = resolve_config(o);
  fs::create_directories(config.output_dir);
  auto cache = std::make_shared<textxai::ResponseCache>(config.effective_cache_dir());
  const textxai::CachedBackends backends(textxai::make_backends(config), cache);

  const textxai::RunReport report = textxai::run_dataset(config, backends, stage);
  const fs::path& out = config.output_dir;

  std::vector<nlohmann::json> ingest, summaries, explanations;
  for (const auto& r : report.results) {
    ingest.push_back(r.ingest);
    if (r.summary) summaries.push_back(*r.summary);
    explanations.insert(explanations.end(), r.explanations.begin(), r.explanations.end());
  }
  write_lines(out / "ingest.jsonl", ingest);
  if (stage >= textxai::Stage::summarize) write_lines(out / "summaries.jsonl", summaries);
  if (stage >= textxai::Stage::explain) write_lines(out / "explanations.jsonl", explanations);
  if (stage >= textxai::Stage::textualize) textxai::write_texts(report, out);
  if (stage >= textxai::Stage::faithfulness) textxai::write_report(report, out);

  std::cerr << to_string(stage) << ": " << report.videos.size() << " video(s) evaluated, " << report.excluded.size()
            << " excluded, " << report.quarantined.size() << " quarantined; " << report.records.size()
            << " record(s); " << backends.backend_calls() << " backend call(s) after cache\n";
  for (const auto& q : report.quarantined) std::cerr << "  quarantined " << q.video_id << ": " << q.error << "\n";
  std::cerr << "output: " << out.string() << "\n";
  return report.exit_code();
}

int rerender(const fs::path& in, const std::optional<std::string>& out) {
  const textxai::RunReport report = textxai::read_report(in);
  const fs::path dir = out ? fs::path(*out) : in;
  fs::create_directories(dir);
  std::ofstream(dir / "tables.md", std::ios::binary | std::ios::trunc) << textxai::render_tables(report);
  std::cout << textxai::render_tables(report);
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fragment-level explanations of video summaries, with textual explanations and "
               "faithfulness / plausibility evaluation"};
  app.require_subcommand(1);

  struct Verb {
    const char* name;
    const char* help;
    textxai::Stage stage;
  };
  const std::vector<Verb> verbs = {
      {"ingest", "Load and validate every selected video", textxai::Stage::ingest},
      {"summarize", "Score frames and pick the summary fragments", textxai::Stage::summarize},
      {"explain", "Compute fragment-level explanations", textxai::Stage::explain},
      {"faithfulness", "Disc+ of the top-k explanation fragments", textxai::Stage::faithfulness},
      {"textualize", "Describe summaries and explanations with the captioner", textxai::Stage::textualize},
      {"plausibility", "Score explanation texts against summary texts", textxai::Stage::plausibility},
      {"run", "All stages plus the report tables", textxai::Stage::plausibility},
  };
  std::vector<Overrides> overrides(verbs.size());
  std::vector<CLI::App*> commands;
  for (std::size_t i = 0; i < verbs.size(); ++i) {
    commands.push_back(app.add_subcommand(verbs[i].name, verbs[i].help));
    add_common(commands.back(), overrides[i]);
  }

  std::string report_in;
  std::optional<std::string> report_out;
  CLI::App* report = app.add_subcommand("report", "Re-render tables.md from a finished run directory");
  report->add_option("--in", report_in, "Run output directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("-o,--out", report_out, "Where to write tables.md (default: --in)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) return rerender(report_in, report_out);
    for (std::size_t i = 0; i < verbs.size(); ++i) {
      if (commands[i]->parsed()) return run_stage(overrides[i], verbs[i].stage);
    }
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
