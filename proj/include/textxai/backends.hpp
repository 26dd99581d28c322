#pragma once

// Uniform gateways to the three model roles. Implementations must be safe to
// call concurrently from up to max_concurrency() threads (0 = unlimited).

#include <atomic>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "textxai/cache.hpp"
#include "textxai/model.hpp"

namespace textxai {

class PromptRegistry;

struct SummarizerCapabilities {
  bool provides_attention = false;
};

class SummarizerBackend {
 public:
  virtual ~SummarizerBackend() = default;

  virtual std::string id() const = 0;
  virtual SummarizerCapabilities capabilities() const { return {}; }
  virtual std::size_t max_concurrency() const { return 0; }

  /// One importance score per feature row.
  virtual std::vector<double> score(const Matrix& features) const = 0;
  /// Per-frame attention signal; only valid when provides_attention.
  virtual std::vector<double> attention(const Matrix& features) const;
};

class CaptionerBackend {
 public:
  virtual ~CaptionerBackend() = default;

  virtual std::string id() const = 0;
  virtual double temperature() const { return 0.0; }
  virtual std::size_t max_concurrency() const { return 0; }

  virtual std::string caption(const Clip& clip, const std::string& prompt) const = 0;
  virtual std::string summarize(std::span<const std::string> descriptions, const std::string& prompt) const = 0;
};

class EmbedderBackend {
 public:
  virtual ~EmbedderBackend() = default;

  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t max_concurrency() const { return 0; }

  virtual std::vector<double> embed(const std::string& text) const = 0;
};

/// Checked wrappers: validate pre/postconditions and turn any adapter
/// failure into BackendError tagged with the backend id.
ImportanceScores score_frames(const SummarizerBackend& backend, const Matrix& features,
                              const std::string& video_id = {});
std::vector<double> attention_signal(const SummarizerBackend& backend, const Matrix& features);
TextArtifact caption_clip(const CaptionerBackend& backend, const Clip& clip, const PromptRegistry& prompts,
                          const std::string& prompt_id, TextKind kind);
/// prompt_text lets the caller pass a count-adjusted rendering of prompt_id.
TextArtifact summarize_texts(const CaptionerBackend& backend, std::span<const std::string> descriptions,
                             const PromptRegistry& prompts, const std::string& prompt_id,
                             const std::string& prompt_text, const std::string& source_digest);
std::vector<double> embed_text(const EmbedderBackend& backend, const std::string& text);

/// Digest of a feature matrix, used as the payload digest for summarizer calls.
std::string matrix_digest(const Matrix& m);

// Caching decorators. They keep the wrapped backend's id and forward only
// cache misses; backend_calls() counts those forwarded requests.

class CachedSummarizer final : public SummarizerBackend {
 public:
  CachedSummarizer(std::shared_ptr<const SummarizerBackend> inner, std::shared_ptr<ResponseCache> cache);

  std::string id() const override { return inner_->id(); }
  SummarizerCapabilities capabilities() const override { return inner_->capabilities(); }
  std::size_t max_concurrency() const override { return inner_->max_concurrency(); }
  std::vector<double> score(const Matrix& features) const override;
  std::vector<double> attention(const Matrix& features) const override;

  std::size_t backend_calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<const SummarizerBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
  mutable std::atomic<std::size_t> calls_{0};
};

class CachedCaptioner final : public CaptionerBackend {
 public:
  CachedCaptioner(std::shared_ptr<const CaptionerBackend> inner, std::shared_ptr<ResponseCache> cache);

  std::string id() const override { return inner_->id(); }
  double temperature() const override { return inner_->temperature(); }
  std::size_t max_concurrency() const override { return inner_->max_concurrency(); }
  std::string caption(const Clip& clip, const std::string& prompt) const override;
  std::string summarize(std::span<const std::string> descriptions, const std::string& prompt) const override;

  std::size_t backend_calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<const CaptionerBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
  mutable std::atomic<std::size_t> calls_{0};
};

class CachedEmbedder final : public EmbedderBackend {
 public:
  CachedEmbedder(std::shared_ptr<const EmbedderBackend> inner, std::shared_ptr<ResponseCache> cache);

  std::string id() const override { return inner_->id(); }
  std::size_t dim() const override { return inner_->dim(); }
  std::size_t max_concurrency() const override { return inner_->max_concurrency(); }
  std::vector<double> embed(const std::string& text) const override;

  std::size_t backend_calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<const EmbedderBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace textxai
