#include "textxai/textual.hpp"

#include <algorithm>
#include <optional>

#include "textxai/digest.hpp"
#include "textxai/parallel.hpp"

namespace textxai {

namespace {

std::vector<std::size_t> checked_order(const FeatureBundle& bundle, std::vector<std::size_t> indices) {
  if (indices.empty()) throw Error(ErrorKind::invalid_input, "at least one fragment is required");
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw Error(ErrorKind::invalid_input, "fragment indices must be distinct");
  }
  if (indices.back() >= bundle.fragment_count()) {
    throw Error(ErrorKind::out_of_range, "fragment index " + std::to_string(indices.back()) + " out of range");
  }
  return indices;
}

}  // namespace

TextArtifact describe_approach1(const CaptionerBackend& captioner, const FeatureBundle& bundle,
                                const std::vector<std::size_t>& fragment_indices, const PromptRegistry& prompts,
                                ClipExtractor& clips, TextKind kind) {
  const auto order = checked_order(bundle, fragment_indices);
  const Clip clip = clips.concat_fragments(bundle, order);
  return caption_clip(captioner, clip, prompts, std::string(kDescribePromptId), kind);
}

Approach2Result describe_approach2(const CaptionerBackend& captioner, const FeatureBundle& bundle,
                                   const std::vector<std::size_t>& fragment_indices, const PromptRegistry& prompts,
                                   ClipExtractor& clips) {
  const auto order = checked_order(bundle, fragment_indices);
  std::vector<std::optional<TextArtifact>> parts(order.size());
  parallel_for(order.size(), captioner.max_concurrency(), [&](std::size_t i) {
    const Clip clip = clips.concat_fragments(bundle, {order[i]});
    parts[i] = caption_clip(captioner, clip, prompts, std::string(kDescribePromptId), TextKind::fragment_description);
  });

  std::vector<TextArtifact> fragments;
  std::vector<std::string> texts;
  Sha256 source;
  source.field("merge");
  for (auto& p : parts) {
    texts.push_back(p->text);
    source.field(p->source_clip_digest);
    fragments.push_back(std::move(*p));
  }
  TextArtifact merged = summarize_texts(captioner, texts, prompts, std::string(kMergePromptId),
                                        prompts.merge_prompt(texts.size()), source.hex());
  return {std::move(merged), std::move(fragments)};
}

TextArtifact describe_summary(const CaptionerBackend& captioner, const FeatureBundle& bundle,
                              const SummarySelection& summary, const PromptRegistry& prompts, ClipExtractor& clips) {
  return describe_approach1(captioner, bundle, summary.fragment_indices, prompts, clips,
                            TextKind::summary_description);
}

}  // namespace textxai
