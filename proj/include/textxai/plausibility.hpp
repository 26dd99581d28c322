#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "textxai/backends.hpp"

namespace textxai {

/// Cosine of the angle between a and b, clamped to [-1, 1] against rounding.
/// Throws invalid_input on length mismatch and undefined_similarity when
/// either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct EmbedderScore {
  double raw_cosine = 0.0;  // [-1, 1]
  double reported = 0.0;    // max(raw_cosine, 0)
  std::optional<std::string> error;

  bool ok() const noexcept { return !error; }
};

struct PlausibilityResult {
  std::string video_id;
  ExplainerId explainer = ExplainerId::attention;
  ApproachId approach = ApproachId::not_applicable;
  std::map<std::string, EmbedderScore> per_embedder;
};

/// Semantic overlap between the explanation and summary texts under every
/// embedder. Embedders run concurrently; a failing embedder records its error
/// and leaves the others intact.
PlausibilityResult plausibility_score(std::span<const std::shared_ptr<const EmbedderBackend>> embedders,
                                      const TextArtifact& explanation, const TextArtifact& summary);

}  // namespace textxai
