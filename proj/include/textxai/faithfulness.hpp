#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "textxai/backends.hpp"
#include "textxai/perturbation.hpp"

namespace textxai {

struct TauResult {
  double value = 0.0;
  /// Either input was constant; value is then the sentinel 0.
  bool degenerate = false;
};

/// Kendall's tau-b with tie correction, O(n log n).
/// Throws invalid_input on length mismatch or fewer than two elements.
TauResult kendall_tau(std::span<const double> y, std::span<const double> y_hat);

struct DiscResult {
  std::string video_id;
  ExplainerId explainer = ExplainerId::attention;
  std::size_t k = 0;
  double delta_e = 0.0;
  bool degenerate = false;
};

/// Features with the top-k fragments of `scores` replaced; k = 0 returns an
/// unchanged copy.
Matrix mask_top_k(const FeatureBundle& bundle, const ExplanationScores& scores, std::size_t k,
                  const Replacement& replacement);

/// Disc+: tau between summarizer outputs before and after masking the top-k
/// fragments. Lower means the explanation found more influential fragments.
/// `original` lets the caller reuse an already computed y.
DiscResult disc_plus(const SummarizerBackend& backend, const FeatureBundle& bundle, const ExplanationScores& scores,
                     std::size_t k, const Replacement& replacement,
                     const std::optional<ImportanceScores>& original = std::nullopt);

}  // namespace textxai
