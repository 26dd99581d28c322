#include "textxai/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include "textxai/clips.hpp"
#include "textxai/dataset.hpp"
#include "textxai/digest.hpp"
#include "textxai/faithfulness.hpp"
#include "textxai/parallel.hpp"
#include "textxai/plausibility.hpp"
#include "textxai/textual.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace textxai {

namespace {

json text_json(const std::string& video_id, const std::string& role, const TextArtifact& t,
               std::optional<ExplainerId> explainer = std::nullopt, std::optional<std::size_t> k = std::nullopt,
               std::optional<ApproachId> approach = std::nullopt) {
  json j{{"video_id", video_id},
         {"role", role},
         {"kind", to_string(t.kind)},
         {"prompt_id", t.prompt_id},
         {"source_clip_digest", t.source_clip_digest},
         {"text", t.text}};
  j["explainer_id"] = explainer ? json(to_string(*explainer)) : json(nullptr);
  j["k"] = k ? json(*k) : json(nullptr);
  j["approach_id"] = approach ? json(to_string(*approach)) : json(nullptr);
  return j;
}

std::string error_flag(std::string_view stage, const std::exception& e) {
  return "error:" + std::string(stage) + ": " + e.what();
}

PromptRegistry prompts_for(const RunConfig& config) {
  return config.prompts ? PromptRegistry::from_file(*config.prompts) : PromptRegistry();
}

ExplanationScores explain(ExplainerId id, const RunConfig& config, const CachedBackends& backends,
                          const FeatureBundle& bundle, const Replacement& replacement, const ImportanceScores& y,
                          std::uint64_t seed) {
  switch (id) {
    case ExplainerId::lime: {
      ExplainerConfig ec = config.explainer;
      ec.seed = seed;
      return explain_lime(backends.summarizer(), bundle, ec, replacement, y);
    }
    case ExplainerId::attention:
      return explain_attention(backends.summarizer(), bundle);
    case ExplainerId::random:
      return explain_random(bundle.fragment_count(), seed);
    case ExplainerId::fixed:
      break;
  }
  throw Error(ErrorKind::config_error, "explainer cannot run inside the pipeline");
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::summarize: return "summarize";
    case Stage::explain: return "explain";
    case Stage::faithfulness: return "faithfulness";
    case Stage::textualize: return "textualize";
    case Stage::plausibility: return "plausibility";
  }
  return "?";
}

SummarySelection select_summary(const FeatureBundle& bundle, const ImportanceScores& y, std::size_t size) {
  if (y.scores.size() != bundle.frame_count()) throw Error(ErrorKind::invalid_input, "scores do not match the bundle");
  const std::size_t f = bundle.fragment_count();
  std::vector<double> mean(f);
  for (std::size_t i = 0; i < f; ++i) {
    const Fragment& fr = bundle.fragments()[i];
    double sum = 0.0;
    for (std::size_t r = fr.start; r < fr.end; ++r) sum += y.scores[r];
    mean[i] = sum / static_cast<double>(fr.size());
  }
  std::vector<std::size_t> order(f);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mean[a] > mean[b]; });
  order.resize(std::min(size, f));
  std::sort(order.begin(), order.end());
  return SummarySelection(std::move(order), f);
}

double overlap_fraction(const std::vector<std::size_t>& explanation, const std::vector<std::size_t>& summary) {
  if (explanation.empty()) return 0.0;
  std::size_t shared = 0;
  for (auto i : explanation) shared += std::find(summary.begin(), summary.end(), i) != summary.end();
  return static_cast<double>(shared) / static_cast<double>(explanation.size());
}

std::uint64_t video_seed(std::uint64_t run_seed, const std::string& video_id) {
  Sha256 h;
  h.field("video-seed");
  h.update_u64(run_seed);
  h.field(video_id);
  return digest_prefix_u64(h.hex());
}

VideoResult run_video(const RunConfig& config, const std::string& digest, const CachedBackends& backends,
                      const FeatureBundle& bundle, const Replacement& replacement, Stage last_stage) {
  VideoResult res;
  res.video_id = bundle.video_id();
  const std::string& vid = res.video_id;
  res.ingest = json{{"video_id", vid},
                    {"frames", bundle.frame_count()},
                    {"feature_dim", bundle.feature_dim()},
                    {"fragments", bundle.fragment_count()},
                    {"n_frames_original", bundle.n_frames_original()},
                    {"bundle_digest", bundle.digest()},
                    {"metadata", bundle.metadata()},
                    {"has_source_video", bundle.source_path().has_value()},
                    {"has_keyframes", bundle.keyframe_dir().has_value()}};
  if (last_stage == Stage::ingest) return res;

  const ImportanceScores y = score_frames(backends.summarizer(), bundle.features(), vid);
  const SummarySelection summary = select_summary(bundle, y, config.summary_size);
  res.summary = json{{"video_id", vid}, {"scores", y.scores}, {"summary_fragments", summary.fragment_indices}};
  if (last_stage == Stage::summarize) return res;

  const std::uint64_t seed = video_seed(config.seed, vid);
  std::vector<std::optional<ExplanationScores>> scores(config.explainers.size());
  std::vector<std::string> explain_errors(config.explainers.size());
  for (std::size_t e = 0; e < config.explainers.size(); ++e) {
    const ExplainerId id = config.explainers[e];
    json j{{"video_id", vid}, {"explainer_id", to_string(id)}};
    try {
      scores[e] = explain(id, config, backends, bundle, replacement, y, seed);
      j["scores"] = scores[e]->per_fragment();
      j["ranking"] = scores[e]->ranking();
      j["ridge_fallback"] = scores[e]->ridge_fallback;
    } catch (const std::exception& ex) {
      explain_errors[e] = error_flag("explain", ex);
      j["error"] = explain_errors[e];
    }
    res.explanations.push_back(std::move(j));
  }
  if (last_stage == Stage::explain) return res;

  const bool textual = last_stage >= Stage::textualize && !config.approaches.empty();
  const bool score_texts = last_stage >= Stage::plausibility;
  const PromptRegistry prompts = textual ? prompts_for(config) : PromptRegistry();
  ClipExtractor clips(config.output_dir / "clips");
  const bool slideshow = !(bundle.source_path() && fs::exists(*bundle.source_path()));

  std::optional<TextArtifact> summary_text;
  std::string summary_error;
  if (textual) {
    try {
      summary_text = describe_summary(backends.captioner(), bundle, summary, prompts, clips);
      res.texts.push_back(text_json(vid, "summary", *summary_text));
    } catch (const std::exception& ex) {
      summary_error = error_flag("summary_text", ex);
    }
  }

  for (std::size_t e = 0; e < config.explainers.size(); ++e) {
    for (const std::size_t k : config.k) {
      EvaluationRecord base;
      base.video_id = vid;
      base.dataset_id = config.dataset_id;
      base.explainer = config.explainers[e];
      base.k = k;
      base.summary_fragments = summary.fragment_indices;
      base.seed = config.seed;
      base.config_digest = digest;

      std::optional<std::vector<std::size_t>> fragments;
      if (!scores[e]) {
        base.flags.push_back(explain_errors[e]);
      } else if (k > bundle.fragment_count()) {
        base.flags.push_back("k_exceeds_fragments");
      } else {
        fragments = scores[e]->top_k(k);
        std::sort(fragments->begin(), fragments->end());
        base.explanation_fragments = *fragments;
        base.overlap_fraction = overlap_fraction(*fragments, summary.fragment_indices);
        if (scores[e]->ridge_fallback) base.flags.push_back("ridge_fallback");
        try {
          const DiscResult d = disc_plus(backends.summarizer(), bundle, *scores[e], k, replacement, y);
          base.disc_plus = d.delta_e;
          base.tau_degenerate = d.degenerate;
        } catch (const std::exception& ex) {
          base.flags.push_back(error_flag("faithfulness", ex));
        }
      }

      if (!textual) {
        base.validate();
        res.records.push_back(std::move(base));
        continue;
      }
      for (const ApproachId approach : config.approaches) {
        EvaluationRecord rec = base;
        rec.approach = approach;
        if (fragments) {
          std::optional<TextArtifact> text;
          try {
            if (approach == ApproachId::approach1) {
              text = describe_approach1(backends.captioner(), bundle, *fragments, prompts, clips);
            } else {
              Approach2Result r = describe_approach2(backends.captioner(), bundle, *fragments, prompts, clips);
              for (const auto& part : r.fragments) res.texts.push_back(text_json(vid, "fragment", part, base.explainer, k, approach));
              text = std::move(r.merged);
            }
            res.texts.push_back(text_json(vid, "explanation", *text, base.explainer, k, approach));
            if (slideshow) rec.flags.push_back("keyframe_slideshow");
          } catch (const std::exception& ex) {
            rec.flags.push_back(error_flag("textualize", ex));
          }
          if (score_texts && text) {
            if (!summary_text) {
              rec.flags.push_back(summary_error);
            } else {
              const auto p = plausibility_score(backends.embedders(), *text, *summary_text);
              for (const auto& [id, s] : p.per_embedder) {
                if (s.ok()) {
                  rec.plausibility[id] = s.reported;
                  rec.plausibility_raw[id] = s.raw_cosine;
                } else {
                  rec.flags.push_back("error:plausibility:" + id + ": " + *s.error);
                }
              }
            }
          }
        }
        rec.validate();
        res.records.push_back(std::move(rec));
      }
    }
  }
  return res;
}

RunReport run_dataset(const RunConfig& config, const CachedBackends& backends, Stage last_stage) {
  config.validate();
  RunReport report;
  report.dataset_id = config.dataset_id;
  report.seed = config.seed;
  report.min_topk_fragments = config.min_topk_fragments;
  report.explainers = config.explainers;
  report.k = config.k;
  report.approaches = last_stage >= Stage::textualize ? config.approaches : std::vector<ApproachId>{};
  if (last_stage >= Stage::plausibility) {
    for (const auto& e : backends.embedders()) report.embedders.push_back(e->id());
  }
  report.config_digest = config_digest(config);

  const std::vector<std::string> keys = config.videos.empty() ? list_videos(config.container) : config.videos;
  LoadOptions options{config.video_dir, config.keyframe_dir};

  std::vector<std::optional<FeatureBundle>> bundles(keys.size());
  std::vector<std::string> load_errors(keys.size());
  parallel_for(keys.size(), config.workers, [&](std::size_t i) {
    try {
      bundles[i].emplace(load_bundle(config.container, keys[i], options));
    } catch (const std::exception& ex) {
      load_errors[i] = ex.what();
    }
  });

  std::vector<std::size_t> included;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!bundles[i]) {
      report.quarantined.push_back({keys[i], load_errors[i]});
    } else if (bundles[i]->fragment_count() < config.min_topk_fragments) {
      report.excluded.emplace_back(keys[i], bundles[i]->fragment_count());
    } else {
      included.push_back(i);
    }
  }

  Replacement replacement;
  if (config.explainer.replacement == ReplacementMode::dataset_mean && !included.empty()) {
    std::vector<const Matrix*> mats;
    for (auto i : included) mats.push_back(&bundles[i]->features());
    replacement = Replacement::dataset_mean(column_mean(mats));
  }

  std::vector<std::optional<VideoResult>> results(included.size());
  std::vector<std::string> run_errors(included.size());
  parallel_for(included.size(), config.workers, [&](std::size_t n) {
    try {
      results[n] = run_video(config, report.config_digest, backends, *bundles[included[n]], replacement, last_stage);
    } catch (const std::exception& ex) {
      run_errors[n] = ex.what();
    }
  });

  for (std::size_t n = 0; n < included.size(); ++n) {
    const std::string& key = keys[included[n]];
    if (!results[n]) {
      report.quarantined.push_back({key, run_errors[n]});
      continue;
    }
    report.videos.push_back(key);
    for (auto& r : results[n]->records) report.records.push_back(std::move(r));
    results[n]->records.clear();
    report.results.push_back(std::move(*results[n]));
  }
  // Load and run failures are reported together, in video order.
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < keys.size(); ++i) position.emplace(keys[i], i);
  std::stable_sort(report.quarantined.begin(), report.quarantined.end(),
                   [&](const VideoFailure& a, const VideoFailure& b) { return position[a.video_id] < position[b.video_id]; });
  return report;
}

}  // namespace textxai
