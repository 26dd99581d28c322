#pragma once

// Deterministic mock backends. Their output contracts are part of the public
// test API: downstream property tests rely on them.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "textxai/backends.hpp"

namespace textxai {

/// planted(j): frames of fragment j score `signal` while any of their feature
/// values is non-zero; every other frame scores `background`. When
/// with_attention is set, attention is 1 on present planted frames, else 0.
class PlantedSummarizer final : public SummarizerBackend {
 public:
  PlantedSummarizer(std::vector<Fragment> fragments, std::size_t planted, bool with_attention = true,
                    double signal = 0.9, double background = 0.1);

  std::string id() const override;
  SummarizerCapabilities capabilities() const override { return {with_attention_}; }
  std::vector<double> score(const Matrix& features) const override;
  std::vector<double> attention(const Matrix& features) const override;

 private:
  std::vector<bool> present_mask(const Matrix& features) const;

  std::vector<Fragment> fragments_;
  std::size_t planted_;
  bool with_attention_;
  double signal_;
  double background_;
};

/// Same score for every frame, regardless of input.
class ConstantSummarizer final : public SummarizerBackend {
 public:
  explicit ConstantSummarizer(double value = 0.5) : value_(value) {}

  std::string id() const override;
  std::vector<double> score(const Matrix& features) const override;

 private:
  double value_;
};

/// Increasing ramp over frames while the planted fragment is present, the
/// reversed ramp once it is zeroed: masking it yields tau = -1.
class ReversingSummarizer final : public SummarizerBackend {
 public:
  ReversingSummarizer(std::vector<Fragment> fragments, std::size_t planted);

  std::string id() const override;
  std::vector<double> score(const Matrix& features) const override;

 private:
  std::vector<Fragment> fragments_;
  std::size_t planted_;
};

/// Replays fixed score / attention vectors; the input must have matching rows.
class FixedSignalSummarizer final : public SummarizerBackend {
 public:
  FixedSignalSummarizer(std::vector<double> scores, std::vector<double> attention);

  std::string id() const override { return "fixed-signal"; }
  SummarizerCapabilities capabilities() const override { return {!attention_.empty()}; }
  std::vector<double> score(const Matrix& features) const override;
  std::vector<double> attention(const Matrix& features) const override;

 private:
  std::vector<double> scores_;
  std::vector<double> attention_;
};

/// "mock-attn": a one-head self-attention scorer with fixed pseudo-random
/// projections derived from `seed`. Masking any rows changes every frame's
/// score through the attention mixing, so perturbations have global effect.
/// The attention signal is the mean attention each frame receives.
class AttentionMockSummarizer final : public SummarizerBackend {
 public:
  explicit AttentionMockSummarizer(std::uint64_t seed = 0, std::size_t rank = 8);

  std::string id() const override;
  SummarizerCapabilities capabilities() const override { return {true}; }
  std::vector<double> score(const Matrix& features) const override;
  std::vector<double> attention(const Matrix& features) const override;

 private:
  struct Pass {
    std::vector<double> scores;
    std::vector<double> received;
  };
  Pass forward(const Matrix& features) const;

  std::uint64_t seed_;
  std::size_t rank_;
};

/// "mock-caption". caption() returns "MOCK(<d8>,<p4>): objects o<a>,o<b>,..."
/// where d8 / p4 are the first 8 / 4 hex digits of the clip digest and the
/// prompt's SHA-256, and object ids derive from the clip's frame digests.
/// summarize() returns the sorted, deduplicated union of the object ids found
/// in its inputs.
class MockCaptioner final : public CaptionerBackend {
 public:
  static constexpr std::uint64_t kObjectVocabulary = 997;

  std::string id() const override { return "mock-caption"; }
  std::string caption(const Clip& clip, const std::string& prompt) const override;
  std::string summarize(std::span<const std::string> descriptions, const std::string& prompt) const override;

  /// Object ids mentioned by a mock text, ascending.
  static std::set<std::uint64_t> object_ids(const std::string& text);
};

/// Order-free token-presence embedders. "mock-bow" hashes lowercase
/// alphanumeric words, "mock-trigram" hashes character trigrams of those
/// words. Each present bucket is 1, others 0, so texts with disjoint buckets
/// embed to orthogonal vectors.
class BagOfTokensEmbedder final : public EmbedderBackend {
 public:
  enum class Tokens { words, char_trigrams };

  explicit BagOfTokensEmbedder(Tokens tokens = Tokens::words, std::size_t dim = 8192);

  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(const std::string& text) const override;

  std::vector<std::string> tokenize(const std::string& text) const;

 private:
  Tokens tokens_;
  std::size_t dim_;
};

}  // namespace textxai
