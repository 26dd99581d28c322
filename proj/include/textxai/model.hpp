#pragma once

// Shared domain types. Every type with invariants validates them on
// construction and throws textxai::Error otherwise, so a live instance is
// always a valid one.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textxai/error.hpp"

namespace textxai {

/// Dense row-major matrix of frame features (rows = sampled frames).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Half-open range [start, end) of sampled-frame indices.
struct Fragment {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
  bool operator==(const Fragment&) const = default;
};

/// Unchecked bundle contents, as produced by a loader or a test.
struct BundleFields {
  std::string video_id;
  Matrix features;
  std::vector<Fragment> fragments;
  std::vector<std::int64_t> picks;
  double fps_original = 0.0;
  std::int64_t n_frames_original = 0;
  std::optional<std::filesystem::path> source_path;
  std::optional<std::filesystem::path> keyframe_dir;
  std::map<std::string, std::string> metadata;
};

/// Validated per-video features, fragment boundaries and frame mapping.
class FeatureBundle {
 public:
  explicit FeatureBundle(BundleFields fields);

  const std::string& video_id() const noexcept { return f_.video_id; }
  const Matrix& features() const noexcept { return f_.features; }
  const std::vector<Fragment>& fragments() const noexcept { return f_.fragments; }
  const std::vector<std::int64_t>& picks() const noexcept { return f_.picks; }
  double fps_original() const noexcept { return f_.fps_original; }
  std::int64_t n_frames_original() const noexcept { return f_.n_frames_original; }
  const std::optional<std::filesystem::path>& source_path() const noexcept { return f_.source_path; }
  const std::optional<std::filesystem::path>& keyframe_dir() const noexcept { return f_.keyframe_dir; }
  const std::map<std::string, std::string>& metadata() const noexcept { return f_.metadata; }

  std::size_t frame_count() const noexcept { return f_.features.rows(); }
  std::size_t fragment_count() const noexcept { return f_.fragments.size(); }
  std::size_t feature_dim() const noexcept { return f_.features.cols(); }

  /// SHA-256 over id, features, boundaries and picks.
  const std::string& digest() const noexcept { return digest_; }

 private:
  BundleFields f_;
  std::string digest_;
};

/// Checks every bundle invariant; throws invariant_violation naming the first
/// one that fails.
FeatureBundle validate_bundle(BundleFields fields);

struct ImportanceScores {
  ImportanceScores(std::string video_id, std::vector<double> scores);

  std::string video_id;
  std::vector<double> scores;
};

/// Fragments chosen by the summarizer, kept in temporal order.
struct SummarySelection {
  SummarySelection(std::vector<std::size_t> fragment_indices, std::size_t fragment_count);

  std::vector<std::size_t> fragment_indices;
  std::size_t k() const noexcept { return fragment_indices.size(); }
};

enum class ExplainerId { lime, attention, random, fixed };

std::string_view to_string(ExplainerId id);
ExplainerId explainer_from_string(std::string_view s);

/// Per-fragment influence. The ranking is derived here (descending score,
/// earlier index first on ties), so it can never disagree with the scores.
class ExplanationScores {
 public:
  ExplanationScores(ExplainerId explainer, std::vector<double> per_fragment);

  ExplainerId explainer() const noexcept { return explainer_; }
  const std::vector<double>& per_fragment() const noexcept { return per_fragment_; }
  const std::vector<std::size_t>& ranking() const noexcept { return ranking_; }
  std::size_t fragment_count() const noexcept { return per_fragment_.size(); }

  std::vector<std::size_t> top_k(std::size_t k) const;

  /// Set when the surrogate fit had to fall back to a ridge floor.
  bool ridge_fallback = false;

 private:
  ExplainerId explainer_;
  std::vector<double> per_fragment_;
  std::vector<std::size_t> ranking_;
};

/// One perturbation: true = fragment kept.
class PerturbationMask {
 public:
  explicit PerturbationMask(std::vector<bool> kept);

  const std::vector<bool>& kept() const noexcept { return kept_; }
  std::size_t size() const noexcept { return kept_.size(); }
  std::size_t kept_count() const noexcept;
  bool operator[](std::size_t i) const { return kept_[i]; }
  bool operator==(const PerturbationMask&) const = default;

 private:
  std::vector<bool> kept_;
};

enum class TextKind { summary_description, explanation_description, fragment_description, merged_description };

std::string_view to_string(TextKind kind);

struct TextArtifact {
  TextArtifact(TextKind kind, std::string text, std::string prompt_id, std::string source_clip_digest);

  TextKind kind;
  std::string text;
  std::string prompt_id;
  std::string source_clip_digest;
};

enum class ApproachId { approach1, approach2, not_applicable };

std::string_view to_string(ApproachId id);
ApproachId approach_from_string(std::string_view s);

enum class ClipSource { original_video, keyframe_slideshow };

std::string_view to_string(ClipSource source);

/// Handle to an encoded clip on disk plus the per-frame content digests.
struct Clip {
  std::string digest;
  std::filesystem::path path;
  std::vector<std::size_t> fragment_indices;
  std::vector<std::string> frame_digests;
  ClipSource source = ClipSource::keyframe_slideshow;
  double fps = 0.0;
  bool lower_fidelity = false;

  std::size_t frame_count() const noexcept { return frame_digests.size(); }
};

/// One row of the evaluation output.
struct EvaluationRecord {
  std::string video_id;
  std::string dataset_id;
  ExplainerId explainer = ExplainerId::attention;
  std::size_t k = 1;
  ApproachId approach = ApproachId::not_applicable;
  std::optional<double> disc_plus;
  bool tau_degenerate = false;
  std::map<std::string, double> plausibility;      // reported, in [0, 1]
  std::map<std::string, double> plausibility_raw;  // raw cosine, in [-1, 1]
  std::vector<std::size_t> summary_fragments;
  std::vector<std::size_t> explanation_fragments;
  double overlap_fraction = 0.0;
  std::vector<std::string> flags;
  std::uint64_t seed = 0;
  std::string config_digest;

  /// Throws invariant_violation when a score is out of range.
  void validate() const;

  bool operator==(const EvaluationRecord&) const = default;
};

void to_json(nlohmann::json& j, const EvaluationRecord& r);
void from_json(const nlohmann::json& j, EvaluationRecord& r);

}  // namespace textxai
