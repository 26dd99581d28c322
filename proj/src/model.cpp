#include "textxai/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "textxai/digest.hpp"

namespace textxai {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::invariant_violation: return "invariant-violation";
    case ErrorKind::out_of_range: return "out-of-range";
    case ErrorKind::backend_error: return "backend-error";
    case ErrorKind::unsupported_capability: return "unsupported-capability";
    case ErrorKind::empty_response: return "empty-response";
    case ErrorKind::clip_unavailable: return "clip-unavailable";
    case ErrorKind::malformed_container: return "malformed-container";
    case ErrorKind::missing_key: return "missing-key";
    case ErrorKind::integrity_error: return "integrity-error";
    case ErrorKind::undefined_similarity: return "undefined-similarity";
    case ErrorKind::config_error: return "config-error";
  }
  return "unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorKind::invalid_input, "matrix data size " + std::to_string(data_.size()) +
                                              " does not match shape " + std::to_string(rows) + "x" +
                                              std::to_string(cols));
  }
}

namespace {

[[noreturn]] void violated(const std::string& what) { throw Error(ErrorKind::invariant_violation, what); }

std::string bundle_digest(const BundleFields& f) {
  Sha256 h;
  h.field("bundle/v1").field(f.video_id);
  h.update_u64(f.features.rows()).update_u64(f.features.cols()).update(f.features.data());
  h.update_u64(f.fragments.size());
  for (const auto& fr : f.fragments) h.update_u64(fr.start).update_u64(fr.end);
  h.update_u64(f.picks.size());
  for (auto p : f.picks) h.update_u64(static_cast<std::uint64_t>(p));
  return h.hex();
}

}  // namespace

FeatureBundle::FeatureBundle(BundleFields fields) : f_(std::move(fields)) {
  const std::size_t n = f_.features.rows();
  if (n == 0) violated("feature matrix has no rows");
  if (f_.features.cols() == 0) violated("feature dimension must be >= 1");
  for (std::size_t r = 0; r < n; ++r) {
    for (double v : f_.features.row(r)) {
      if (!std::isfinite(v)) violated("non-finite feature at row " + std::to_string(r));
    }
  }
  if (f_.fragments.empty()) violated("no fragments");
  for (std::size_t i = 0; i < f_.fragments.size(); ++i) {
    const auto& fr = f_.fragments[i];
    if (fr.end <= fr.start) violated("empty fragment " + std::to_string(i));
    if (i == 0) {
      if (fr.start != 0) violated("fragments do not cover frames [0, " + std::to_string(fr.start) + ")");
      continue;
    }
    const auto& prev = f_.fragments[i - 1];
    if (fr.start < prev.start) violated("fragments not sorted at fragment " + std::to_string(i));
    if (fr.start < prev.end) violated("overlap at fragment " + std::to_string(i));
    if (fr.start > prev.end) violated("gap before fragment " + std::to_string(i));
  }
  if (f_.fragments.back().end != n) {
    violated("fragments end at " + std::to_string(f_.fragments.back().end) + " but there are " +
             std::to_string(n) + " sampled frames");
  }
  if (!f_.picks.empty()) {
    if (f_.picks.size() != n) {
      violated("picks length " + std::to_string(f_.picks.size()) + " != feature rows " + std::to_string(n));
    }
    for (std::size_t i = 1; i < f_.picks.size(); ++i) {
      if (f_.picks[i] <= f_.picks[i - 1]) violated("picks not strictly increasing at index " + std::to_string(i));
    }
  }
  digest_ = bundle_digest(f_);
}

FeatureBundle validate_bundle(BundleFields fields) { return FeatureBundle(std::move(fields)); }

ImportanceScores::ImportanceScores(std::string id, std::vector<double> s)
    : video_id(std::move(id)), scores(std::move(s)) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]) || scores[i] < 0.0 || scores[i] > 1.0) {
      violated("importance score " + std::to_string(i) + " outside [0,1]");
    }
  }
}

SummarySelection::SummarySelection(std::vector<std::size_t> indices, std::size_t fragment_count)
    : fragment_indices(std::move(indices)) {
  if (fragment_indices.empty()) violated("summary selects no fragments");
  for (std::size_t i = 0; i < fragment_indices.size(); ++i) {
    if (fragment_indices[i] >= fragment_count) violated("summary fragment index out of range");
    if (i > 0 && fragment_indices[i] <= fragment_indices[i - 1]) {
      violated("summary indices must be distinct and ascending");
    }
  }
}

std::string_view to_string(ExplainerId id) {
  switch (id) {
    case ExplainerId::lime: return "lime";
    case ExplainerId::attention: return "attention";
    case ExplainerId::random: return "random";
    case ExplainerId::fixed: return "fixed";
  }
  return "unknown";
}

ExplainerId explainer_from_string(std::string_view s) {
  if (s == "lime") return ExplainerId::lime;
  if (s == "attention") return ExplainerId::attention;
  if (s == "random") return ExplainerId::random;
  if (s == "fixed") return ExplainerId::fixed;
  throw Error(ErrorKind::config_error, "unknown explainer '" + std::string(s) + "'");
}

ExplanationScores::ExplanationScores(ExplainerId explainer, std::vector<double> per_fragment)
    : explainer_(explainer), per_fragment_(std::move(per_fragment)) {
  if (per_fragment_.empty()) violated("explanation has no fragments");
  for (std::size_t i = 0; i < per_fragment_.size(); ++i) {
    if (!std::isfinite(per_fragment_[i])) violated("non-finite influence at fragment " + std::to_string(i));
  }
  ranking_.resize(per_fragment_.size());
  std::iota(ranking_.begin(), ranking_.end(), std::size_t{0});
  std::stable_sort(ranking_.begin(), ranking_.end(), [this](std::size_t a, std::size_t b) {
    return per_fragment_[a] > per_fragment_[b];
  });
}

std::vector<std::size_t> ExplanationScores::top_k(std::size_t k) const {
  if (k < 1 || k > ranking_.size()) {
    throw Error(ErrorKind::out_of_range,
                "k=" + std::to_string(k) + " outside [1, " + std::to_string(ranking_.size()) + "]");
  }
  return {ranking_.begin(), ranking_.begin() + static_cast<std::ptrdiff_t>(k)};
}

PerturbationMask::PerturbationMask(std::vector<bool> kept) : kept_(std::move(kept)) {
  const auto n_kept = kept_count();
  if (n_kept == 0) violated("mask drops every fragment");
  if (n_kept == kept_.size()) violated("mask keeps every fragment");
}

std::size_t PerturbationMask::kept_count() const noexcept {
  return static_cast<std::size_t>(std::count(kept_.begin(), kept_.end(), true));
}

std::string_view to_string(TextKind kind) {
  switch (kind) {
    case TextKind::summary_description: return "summary_description";
    case TextKind::explanation_description: return "explanation_description";
    case TextKind::fragment_description: return "fragment_description";
    case TextKind::merged_description: return "merged_description";
  }
  return "unknown";
}

TextArtifact::TextArtifact(TextKind k, std::string t, std::string pid, std::string digest)
    : kind(k), text(std::move(t)), prompt_id(std::move(pid)), source_clip_digest(std::move(digest)) {
  if (text.empty()) throw Error(ErrorKind::empty_response, "text artifact is empty");
  if (prompt_id.empty()) violated("text artifact has no prompt id");
}

std::string_view to_string(ApproachId id) {
  switch (id) {
    case ApproachId::approach1: return "approach1";
    case ApproachId::approach2: return "approach2";
    case ApproachId::not_applicable: return "not_applicable";
  }
  return "unknown";
}

ApproachId approach_from_string(std::string_view s) {
  if (s == "approach1" || s == "1") return ApproachId::approach1;
  if (s == "approach2" || s == "2") return ApproachId::approach2;
  if (s == "not_applicable") return ApproachId::not_applicable;
  throw Error(ErrorKind::config_error, "unknown approach '" + std::string(s) + "'");
}

std::string_view to_string(ClipSource source) {
  return source == ClipSource::original_video ? "original_video" : "keyframe_slideshow";
}

void EvaluationRecord::validate() const {
  if (disc_plus && (!std::isfinite(*disc_plus) || *disc_plus < -1.0 || *disc_plus > 1.0)) {
    violated("disc_plus outside [-1,1] for " + video_id);
  }
  for (const auto& [id, v] : plausibility) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) violated("reported plausibility outside [0,1] for " + id);
  }
  for (const auto& [id, v] : plausibility_raw) {
    if (!std::isfinite(v) || v < -1.0 || v > 1.0) violated("raw cosine outside [-1,1] for " + id);
  }
}

void to_json(nlohmann::json& j, const EvaluationRecord& r) {
  j = nlohmann::json{
      {"video_id", r.video_id},
      {"dataset_id", r.dataset_id},
      {"explainer_id", to_string(r.explainer)},
      {"k", r.k},
      {"approach_id", to_string(r.approach)},
      {"disc_plus", r.disc_plus ? nlohmann::json(*r.disc_plus) : nlohmann::json(nullptr)},
      {"tau_degenerate", r.tau_degenerate},
      {"plausibility", r.plausibility},
      {"plausibility_raw", r.plausibility_raw},
      {"summary_fragments", r.summary_fragments},
      {"explanation_fragments", r.explanation_fragments},
      {"overlap_fraction", r.overlap_fraction},
      {"flags", r.flags},
      {"seed", r.seed},
      {"config_digest", r.config_digest},
  };
}

void from_json(const nlohmann::json& j, EvaluationRecord& r) {
  j.at("video_id").get_to(r.video_id);
  j.at("dataset_id").get_to(r.dataset_id);
  r.explainer = explainer_from_string(j.at("explainer_id").get<std::string>());
  j.at("k").get_to(r.k);
  r.approach = approach_from_string(j.at("approach_id").get<std::string>());
  const auto& d = j.at("disc_plus");
  r.disc_plus = d.is_null() ? std::nullopt : std::optional<double>(d.get<double>());
  j.at("tau_degenerate").get_to(r.tau_degenerate);
  j.at("plausibility").get_to(r.plausibility);
  j.at("plausibility_raw").get_to(r.plausibility_raw);
  j.at("summary_fragments").get_to(r.summary_fragments);
  j.at("explanation_fragments").get_to(r.explanation_fragments);
  j.at("overlap_fraction").get_to(r.overlap_fraction);
  j.at("flags").get_to(r.flags);
  j.at("seed").get_to(r.seed);
  j.at("config_digest").get_to(r.config_digest);
}

}  // namespace textxai
