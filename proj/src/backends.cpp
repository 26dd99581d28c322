#include "textxai/backends.hpp"

#include <cmath>
#include <cstring>

#include <json.hpp>

#include "textxai/digest.hpp"
#include "textxai/prompts.hpp"

namespace textxai {

std::vector<double> SummarizerBackend::attention(const Matrix&) const {
  throw Error(ErrorKind::unsupported_capability, id() + ": backend does not provide an attention signal");
}

namespace {

template <typename Fn>
auto guarded(const std::string& backend_id, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError(backend_id, e.what());
  }
}

void require_finite_features(const Matrix& features) {
  if (features.empty()) throw Error(ErrorKind::invalid_input, "feature matrix is empty");
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_input, "feature matrix contains non-finite values");
  }
}

std::string encode_doubles(const std::vector<double>& v) {
  std::string bytes(v.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), v.data(), bytes.size());
  return bytes;
}

std::vector<double> decode_doubles(const std::string& bytes) {
  if (bytes.size() % sizeof(double) != 0) {
    throw Error(ErrorKind::integrity_error, "cached vector has a truncated payload");
  }
  std::vector<double> v(bytes.size() / sizeof(double));
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

}  // namespace

std::string matrix_digest(const Matrix& m) {
  return Sha256().field("matrix/v1").update_u64(m.rows()).update_u64(m.cols()).update(m.data()).hex();
}

ImportanceScores score_frames(const SummarizerBackend& backend, const Matrix& features, const std::string& video_id) {
  require_finite_features(features);
  const std::string bid = backend.id();
  auto scores = guarded(bid, [&] { return backend.score(features); });
  if (scores.size() != features.rows()) {
    throw BackendError(bid, "returned " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(features.rows()) + " frames");
  }
  for (double s : scores) {
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) throw BackendError(bid, "score outside [0,1]");
  }
  return ImportanceScores(video_id, std::move(scores));
}

std::vector<double> attention_signal(const SummarizerBackend& backend, const Matrix& features) {
  if (!backend.capabilities().provides_attention) {
    throw Error(ErrorKind::unsupported_capability, backend.id() + ": backend does not provide an attention signal");
  }
  require_finite_features(features);
  const std::string bid = backend.id();
  auto att = guarded(bid, [&] { return backend.attention(features); });
  if (att.size() != features.rows()) {
    throw BackendError(bid, "returned " + std::to_string(att.size()) + " attention values for " +
                                std::to_string(features.rows()) + " frames");
  }
  for (double a : att) {
    if (!std::isfinite(a)) throw BackendError(bid, "non-finite attention value");
  }
  return att;
}

TextArtifact caption_clip(const CaptionerBackend& backend, const Clip& clip, const PromptRegistry& prompts,
                          const std::string& prompt_id, TextKind kind) {
  if (clip.frame_count() == 0) throw Error(ErrorKind::invalid_input, "clip has no frames");
  const std::string& prompt = prompts.get(prompt_id);
  const std::string bid = backend.id();
  auto text = guarded(bid, [&] { return backend.caption(clip, prompt); });
  if (text.empty()) throw Error(ErrorKind::empty_response, bid + ": empty caption");
  return TextArtifact(kind, std::move(text), prompt_id, clip.digest);
}

TextArtifact summarize_texts(const CaptionerBackend& backend, std::span<const std::string> descriptions,
                             const PromptRegistry& prompts, const std::string& prompt_id,
                             const std::string& prompt_text, const std::string& source_digest) {
  if (descriptions.empty()) throw Error(ErrorKind::invalid_input, "no descriptions to summarize");
  (void)prompts.get(prompt_id);
  const std::string bid = backend.id();
  auto text = guarded(bid, [&] { return backend.summarize(descriptions, prompt_text); });
  if (text.empty()) throw Error(ErrorKind::empty_response, bid + ": empty summary");
  return TextArtifact(TextKind::merged_description, std::move(text), prompt_id, source_digest);
}

std::vector<double> embed_text(const EmbedderBackend& backend, const std::string& text) {
  if (text.empty()) throw Error(ErrorKind::invalid_input, "cannot embed empty text");
  const std::string bid = backend.id();
  auto v = guarded(bid, [&] { return backend.embed(text); });
  if (v.size() != backend.dim()) {
    throw BackendError(bid, "embedding has length " + std::to_string(v.size()) + ", expected " +
                                std::to_string(backend.dim()));
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw BackendError(bid, "non-finite embedding value");
  }
  return v;
}

CachedSummarizer::CachedSummarizer(std::shared_ptr<const SummarizerBackend> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::vector<double> CachedSummarizer::score(const Matrix& features) const {
  const auto key = cache_key(inner_->id(), "score_frames", matrix_digest(features));
  if (auto hit = cache_->get(key)) return decode_doubles(*hit);
  ++calls_;
  auto v = inner_->score(features);
  cache_->put(key, encode_doubles(v));
  return v;
}

std::vector<double> CachedSummarizer::attention(const Matrix& features) const {
  const auto key = cache_key(inner_->id(), "attention_signal", matrix_digest(features));
  if (auto hit = cache_->get(key)) return decode_doubles(*hit);
  ++calls_;
  auto v = inner_->attention(features);
  cache_->put(key, encode_doubles(v));
  return v;
}

CachedCaptioner::CachedCaptioner(std::shared_ptr<const CaptionerBackend> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachedCaptioner::caption(const Clip& clip, const std::string& prompt) const {
  const auto key = cache_key(inner_->id(), "caption_clip", clip.digest, sha256_hex(prompt));
  if (auto hit = cache_->get(key)) return *hit;
  ++calls_;
  auto text = inner_->caption(clip, prompt);
  cache_->put(key, text);
  return text;
}

std::string CachedCaptioner::summarize(std::span<const std::string> descriptions, const std::string& prompt) const {
  const auto payload = sha256_hex(nlohmann::json(std::vector<std::string>(descriptions.begin(), descriptions.end())).dump());
  const auto key = cache_key(inner_->id(), "summarize_texts", payload, sha256_hex(prompt));
  if (auto hit = cache_->get(key)) return *hit;
  ++calls_;
  auto text = inner_->summarize(descriptions, prompt);
  cache_->put(key, text);
  return text;
}

CachedEmbedder::CachedEmbedder(std::shared_ptr<const EmbedderBackend> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::vector<double> CachedEmbedder::embed(const std::string& text) const {
  const auto key = cache_key(inner_->id(), "embed_text", sha256_hex(text));
  if (auto hit = cache_->get(key)) return decode_doubles(*hit);
  ++calls_;
  auto v = inner_->embed(text);
  cache_->put(key, encode_doubles(v));
  return v;
}

}  // namespace textxai
