#pragma once

// Textual explanations. Only fragment indices reach this layer, never
// explanation scores: texts depend on clip digests, prompts and the
// captioner alone.

#include <cstddef>
#include <vector>

#include "textxai/backends.hpp"
#include "textxai/clips.hpp"
#include "textxai/prompts.hpp"

namespace textxai {

/// Approach 1: caption the temporally ordered concatenation of the fragments
/// with describe_v1.
TextArtifact describe_approach1(const CaptionerBackend& captioner, const FeatureBundle& bundle,
                                const std::vector<std::size_t>& fragment_indices, const PromptRegistry& prompts,
                                ClipExtractor& clips, TextKind kind = TextKind::explanation_description);

struct Approach2Result {
  TextArtifact merged;
  /// One fragment_description per fragment, in temporal order.
  std::vector<TextArtifact> fragments;
};

/// Approach 2: caption each fragment on its own, then merge the descriptions
/// (in temporal order) with merge_v1. Any failed fragment fails the whole call.
Approach2Result describe_approach2(const CaptionerBackend& captioner, const FeatureBundle& bundle,
                                   const std::vector<std::size_t>& fragment_indices, const PromptRegistry& prompts,
                                   ClipExtractor& clips);

TextArtifact describe_summary(const CaptionerBackend& captioner, const FeatureBundle& bundle,
                              const SummarySelection& summary, const PromptRegistry& prompts, ClipExtractor& clips);

}  // namespace textxai
