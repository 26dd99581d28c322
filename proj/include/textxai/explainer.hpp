#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "textxai/backends.hpp"
#include "textxai/perturbation.hpp"

namespace textxai {

enum class MaskScheme {
  sampled,     // M Bernoulli masks, degenerate draws resampled
  exhaustive,  // all 2^F - 2 legal masks; M is ignored
};

struct ExplainerConfig {
  std::size_t M = 20000;
  double keep_probability = 0.5;
  double kernel_sigma = 0.25;
  double ridge_lambda = 1e-3;
  ReplacementMode replacement = ReplacementMode::zeros;
  std::uint64_t seed = 0;
  MaskScheme mask_scheme = MaskScheme::sampled;

  /// Throws config_error when an invariant does not hold.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExplainerConfig& c);
void from_json(const nlohmann::json& j, ExplainerConfig& c);

/// Smallest ridge used when the unregularised normal equations are singular.
inline constexpr double kRidgeFloor = 1e-6;

/// M masks drawn with independent Bernoulli(keep_probability) flags per
/// fragment; all-kept / all-dropped draws are redrawn. A pure function of
/// (F, M, keep_probability, seed).
std::vector<PerturbationMask> sample_masks(std::size_t fragment_count, const ExplainerConfig& config);

/// Every legal mask over F fragments, in increasing bit order. F <= 24.
std::vector<PerturbationMask> enumerate_masks(std::size_t fragment_count);

/// Kernel weight of a mask: exp(-(1 - kept/F)^2 / sigma^2).
double mask_weight(const PerturbationMask& mask, double kernel_sigma);

/// Rank fidelity between original and perturbed outputs. Identical outputs
/// score 1; otherwise tau-b, with a constant side scoring 0.
double rank_fidelity(std::span<const double> y, std::span<const double> y_hat);

struct SurrogateFit {
  double intercept = 0.0;
  std::vector<double> coefficients;
  bool ridge_fallback = false;
};

/// Weighted ridge fit of target ~ intercept + sum_i w_i z_i (intercept not
/// penalised). Solved on weighted-centred data via Cholesky; when the system
/// is singular the ridge is raised to at least kRidgeFloor and the fit is
/// flagged.
SurrogateFit fit_surrogate(std::span<const PerturbationMask> masks, std::span<const double> targets,
                           const ExplainerConfig& config);

/// Perturbation-based explanation: fidelity of each masked input's output
/// to the original, regressed on the masks. Coefficients are the
/// per-fragment influence (larger = more influential).
ExplanationScores explain_lime(const SummarizerBackend& backend, const FeatureBundle& bundle,
                               const ExplainerConfig& config, const Replacement& replacement = {},
                               const std::optional<ImportanceScores>& original = std::nullopt);

/// Same, over a caller-supplied mask set.
ExplanationScores explain_lime_on_masks(const SummarizerBackend& backend, const FeatureBundle& bundle,
                                        std::span<const PerturbationMask> masks, const ExplainerConfig& config,
                                        const Replacement& replacement = {},
                                        const std::optional<ImportanceScores>& original = std::nullopt);

/// Mean of the backend's per-frame attention within each fragment.
ExplanationScores explain_attention(const SummarizerBackend& backend, const FeatureBundle& bundle);

/// Baseline: uniform random influence per fragment from `seed`.
ExplanationScores explain_random(std::size_t fragment_count, std::uint64_t seed);

/// First k fragments by (score desc, index asc). Throws out_of_range unless
/// 1 <= k <= fragment count.
std::vector<std::size_t> top_k_fragments(const ExplanationScores& scores, std::size_t k);

}  // namespace textxai
