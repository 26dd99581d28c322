#pragma once

// End-to-end experiment: summarize, explain, Disc+, textualize, plausibility,
// and the faithfulness / plausibility report tables.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "textxai/adapter.hpp"
#include "textxai/backends.hpp"
#include "textxai/explainer.hpp"
#include "textxai/model.hpp"

namespace textxai {

struct RunConfig {
  std::string dataset_id = "dataset";
  std::filesystem::path container;
  std::optional<std::filesystem::path> video_dir;
  std::optional<std::filesystem::path> keyframe_dir;
  std::optional<std::filesystem::path> prompts;

  std::string summarizer = "mock-attn";
  std::string captioner = "mock-caption";
  std::vector<std::string> embedders = {"mock-bow", "mock-trigram"};
  std::map<std::string, AdapterEndpoint> adapters;

  std::vector<ExplainerId> explainers = {ExplainerId::attention, ExplainerId::lime};
  ExplainerConfig explainer;  // explainer.replacement is the replacement mode
  std::vector<std::size_t> k = {1, 3};
  std::vector<ApproachId> approaches = {ApproachId::approach1, ApproachId::approach2};
  std::uint64_t seed = 0;
  /// Minimum fragment count for a video to enter the run (1 = Video Set 1,
  /// 3 = Video Set 2).
  std::size_t min_topk_fragments = 1;
  std::size_t summary_size = 3;
  std::vector<std::string> videos;  // empty = every video in the container

  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> cache_dir;  // default <output_dir>/cache
  std::size_t workers = 1;

  /// Throws config_error naming the first invalid field.
  void validate() const;
  std::filesystem::path effective_cache_dir() const { return cache_dir ? *cache_dir : output_dir / "cache"; }
};

/// Relative paths in the file resolve against the file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const RunConfig& config);

/// SHA-256 of the canonical experiment definition: key order does not matter,
/// and output/cache locations and worker count are left out. The container
/// enters through its content digest, not its path.
std::string config_digest(const RunConfig& config);

struct BackendSet {
  std::shared_ptr<const SummarizerBackend> summarizer;
  std::shared_ptr<const CaptionerBackend> captioner;
  std::vector<std::shared_ptr<const EmbedderBackend>> embedders;
};

/// Instantiates the configured ids: mock-attn, mock-caption, mock-bow,
/// mock-trigram, or a registered model id with an adapter endpoint.
BackendSet make_backends(const RunConfig& config);

/// Backends behind the response cache, with a count of forwarded calls.
class CachedBackends {
 public:
  CachedBackends(const BackendSet& raw, std::shared_ptr<ResponseCache> cache);

  const SummarizerBackend& summarizer() const { return *summarizer_; }
  const CaptionerBackend& captioner() const { return *captioner_; }
  std::span<const std::shared_ptr<const EmbedderBackend>> embedders() const { return embedder_view_; }

  /// Requests that missed the cache and reached a backend.
  std::size_t backend_calls() const;

 private:
  std::shared_ptr<CachedSummarizer> summarizer_;
  std::shared_ptr<CachedCaptioner> captioner_;
  std::vector<std::shared_ptr<CachedEmbedder>> embedders_;
  std::vector<std::shared_ptr<const EmbedderBackend>> embedder_view_;
};

enum class Stage { ingest, summarize, explain, faithfulness, textualize, plausibility };

std::string_view to_string(Stage stage);

/// Top `size` fragments by mean frame score (earlier index on ties), in
/// temporal order.
SummarySelection select_summary(const FeatureBundle& bundle, const ImportanceScores& y, std::size_t size);

/// |explanation ∩ summary| / |explanation|.
double overlap_fraction(const std::vector<std::size_t>& explanation, const std::vector<std::size_t>& summary);

/// Seed for one video's randomness, fixed before any work is dispatched.
std::uint64_t video_seed(std::uint64_t run_seed, const std::string& video_id);

struct VideoResult {
  std::string video_id;
  nlohmann::json ingest;                          // shape and provenance
  std::optional<nlohmann::json> summary;          // frame scores + selection
  std::vector<nlohmann::json> explanations;       // one per explainer
  std::vector<nlohmann::json> texts;              // every text artifact
  std::vector<EvaluationRecord> records;
};

/// Runs every (explainer, k, approach) combination for one loaded bundle up
/// to `last_stage`. Failures inside a combination become record flags;
/// failures that leave nothing to evaluate (summarizer down) throw.
/// `replacement` must match config.explainer.replacement (for dataset_mean it
/// carries the mean over the evaluated videos).
VideoResult run_video(const RunConfig& config, const std::string& config_digest, const CachedBackends& backends,
                      const FeatureBundle& bundle, const Replacement& replacement,
                      Stage last_stage = Stage::plausibility);

struct VideoFailure {
  std::string video_id;
  std::string error;
};

struct RunReport {
  std::string dataset_id;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::size_t min_topk_fragments = 1;
  std::vector<ExplainerId> explainers;
  std::vector<std::size_t> k;
  std::vector<ApproachId> approaches;
  std::vector<std::string> embedders;

  std::vector<std::string> videos;  // evaluated
  std::vector<std::pair<std::string, std::size_t>> excluded;  // (video, fragment count)
  std::vector<VideoFailure> quarantined;
  std::vector<EvaluationRecord> records;  // sorted by video, explainer, k, approach
  std::vector<VideoResult> results;

  int exit_code() const { return quarantined.empty() ? 0 : 2; }
};

/// Loads, filters and evaluates every selected video on a bounded worker
/// pool. A failing video is quarantined once and never aborts the run.
RunReport run_dataset(const RunConfig& config, const CachedBackends& backends, Stage last_stage = Stage::plausibility);

/// Faithfulness and plausibility tables as Markdown. Means are plain means over videos.
std::string render_tables(const RunReport& report);
nlohmann::json report_json(const RunReport& report);

/// Writes records.jsonl, tables.md and report.json into `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);
/// Writes texts/<video>.jsonl for every evaluated video.
void write_texts(const RunReport& report, const std::filesystem::path& dir);

std::vector<EvaluationRecord> read_records(const std::filesystem::path& records_jsonl);
/// Rebuilds a report (records and metadata) from a written output directory.
RunReport read_report(const std::filesystem::path& dir);

}  // namespace textxai
