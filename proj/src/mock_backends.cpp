#include "textxai/mock_backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "textxai/digest.hpp"

namespace textxai {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [-1, 1), reproducible on every platform.
double unit_weight(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t bits = splitmix64(seed * 0x100000001b3ULL ^ splitmix64(index));
  return static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
}

bool row_present(const Matrix& m, std::size_t r) {
  for (double v : m.row(r)) {
    if (v != 0.0) return true;
  }
  return false;
}

void check_fragment(const std::vector<Fragment>& fragments, std::size_t planted) {
  if (planted >= fragments.size()) throw Error(ErrorKind::invalid_input, "planted fragment index out of range");
}

void check_rows(const Matrix& features, const std::vector<Fragment>& fragments) {
  if (fragments.empty() || fragments.back().end != features.rows()) {
    throw Error(ErrorKind::invalid_input, "feature rows do not match the mock's fragment boundaries");
  }
}

}  // namespace

PlantedSummarizer::PlantedSummarizer(std::vector<Fragment> fragments, std::size_t planted, bool with_attention,
                                     double signal, double background)
    : fragments_(std::move(fragments)),
      planted_(planted),
      with_attention_(with_attention),
      signal_(signal),
      background_(background) {
  check_fragment(fragments_, planted_);
}

std::string PlantedSummarizer::id() const { return "planted(j=" + std::to_string(planted_) + ")"; }

std::vector<bool> PlantedSummarizer::present_mask(const Matrix& features) const {
  check_rows(features, fragments_);
  std::vector<bool> present(features.rows(), false);
  const auto& fr = fragments_[planted_];
  for (std::size_t r = fr.start; r < fr.end; ++r) present[r] = row_present(features, r);
  return present;
}

std::vector<double> PlantedSummarizer::score(const Matrix& features) const {
  const auto present = present_mask(features);
  std::vector<double> out(features.rows(), background_);
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (present[r]) out[r] = signal_;
  }
  return out;
}

std::vector<double> PlantedSummarizer::attention(const Matrix& features) const {
  if (!with_attention_) return SummarizerBackend::attention(features);
  const auto present = present_mask(features);
  std::vector<double> out(features.rows(), 0.0);
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (present[r]) out[r] = 1.0;
  }
  return out;
}

std::string ConstantSummarizer::id() const {
  std::ostringstream ss;
  ss << "constant(" << value_ << ")";
  return ss.str();
}

std::vector<double> ConstantSummarizer::score(const Matrix& features) const {
  return std::vector<double>(features.rows(), value_);
}

ReversingSummarizer::ReversingSummarizer(std::vector<Fragment> fragments, std::size_t planted)
    : fragments_(std::move(fragments)), planted_(planted) {
  check_fragment(fragments_, planted_);
}

std::string ReversingSummarizer::id() const { return "reversing(j=" + std::to_string(planted_) + ")"; }

std::vector<double> ReversingSummarizer::score(const Matrix& features) const {
  check_rows(features, fragments_);
  const auto& fr = fragments_[planted_];
  bool present = false;
  for (std::size_t r = fr.start; r < fr.end && !present; ++r) present = row_present(features, r);
  const std::size_t n = features.rows();
  std::vector<double> out(n, 0.5);
  if (n < 2) return out;
  for (std::size_t i = 0; i < n; ++i) {
    const double ramp = static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = present ? ramp : 1.0 - ramp;
  }
  return out;
}

FixedSignalSummarizer::FixedSignalSummarizer(std::vector<double> scores, std::vector<double> attention)
    : scores_(std::move(scores)), attention_(std::move(attention)) {}

std::vector<double> FixedSignalSummarizer::score(const Matrix& features) const {
  if (features.rows() != scores_.size()) throw Error(ErrorKind::invalid_input, "fixed-signal row mismatch");
  return scores_;
}

std::vector<double> FixedSignalSummarizer::attention(const Matrix& features) const {
  if (attention_.empty()) return SummarizerBackend::attention(features);
  if (features.rows() != attention_.size()) throw Error(ErrorKind::invalid_input, "fixed-signal row mismatch");
  return attention_;
}

AttentionMockSummarizer::AttentionMockSummarizer(std::uint64_t seed, std::size_t rank) : seed_(seed), rank_(rank) {
  if (rank_ == 0) throw Error(ErrorKind::invalid_input, "attention mock rank must be >= 1");
}

std::string AttentionMockSummarizer::id() const {
  return seed_ == 0 ? std::string("mock-attn") : "mock-attn(seed=" + std::to_string(seed_) + ")";
}

AttentionMockSummarizer::Pass AttentionMockSummarizer::forward(const Matrix& x) const {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(d));

  // Projections are a function of (seed, column) only, so any D works.
  std::vector<double> wq(rank_ * d), wk(rank_ * d), wv(d);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < rank_; ++r) {
      wq[r * d + c] = unit_weight(seed_, (r * 2 + 0) * 1000003ULL + c);
      wk[r * d + c] = unit_weight(seed_, (r * 2 + 1) * 1000003ULL + c);
    }
    wv[c] = unit_weight(seed_ ^ 0xa5a5a5a5ULL, c);
  }

  std::vector<double> q(n * rank_, 0.0), k(n * rank_, 0.0), val(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      const double xv = row[c] * in_scale;
      if (xv == 0.0) continue;
      for (std::size_t r = 0; r < rank_; ++r) {
        q[i * rank_ + r] += wq[r * d + c] * xv;
        k[i * rank_ + r] += wk[r * d + c] * xv;
      }
      val[i] += wv[c] * xv;
    }
  }

  Pass out{std::vector<double>(n), std::vector<double>(n, 0.0)};
  const double logit_scale = 1.0 / std::sqrt(static_cast<double>(rank_));
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t r = 0; r < rank_; ++r) dot += q[i * rank_ + r] * k[j * rank_ + r];
      logits[j] = dot * logit_scale;
      mx = std::max(mx, logits[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = std::exp(logits[j] - mx);
      z += logits[j];
    }
    double h = 0.5 * val[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double a = logits[j] / z;
      h += a * val[j];
      out.received[j] += a / static_cast<double>(n);
    }
    out.scores[i] = 1.0 / (1.0 + std::exp(-2.0 * h));
  }
  return out;
}

std::vector<double> AttentionMockSummarizer::score(const Matrix& features) const { return forward(features).scores; }

std::vector<double> AttentionMockSummarizer::attention(const Matrix& features) const {
  return forward(features).received;
}

namespace {

std::string join_objects(const std::set<std::uint64_t>& ids) {
  std::string s;
  for (auto id : ids) {
    if (!s.empty()) s += ',';
    s += 'o' + std::to_string(id);
  }
  return s;
}

}  // namespace

std::string MockCaptioner::caption(const Clip& clip, const std::string& prompt) const {
  if (clip.frame_digests.empty()) throw Error(ErrorKind::invalid_input, "mock captioner: clip has no frames");
  std::set<std::uint64_t> ids;
  for (const auto& fd : clip.frame_digests) ids.insert(digest_prefix_u64(fd) % kObjectVocabulary);
  return "MOCK(" + clip.digest.substr(0, 8) + "," + sha256_hex(prompt).substr(0, 4) + "): objects " + join_objects(ids);
}

std::string MockCaptioner::summarize(std::span<const std::string> descriptions, const std::string& prompt) const {
  std::set<std::uint64_t> ids;
  for (const auto& d : descriptions) ids.merge(object_ids(d));
  return "MOCK(merged," + sha256_hex(prompt).substr(0, 4) + "): objects " + join_objects(ids);
}

std::set<std::uint64_t> MockCaptioner::object_ids(const std::string& text) {
  std::set<std::uint64_t> ids;
  const auto pos = text.find("objects ");
  if (pos == std::string::npos) return ids;
  std::size_t i = pos + 8;
  while (i < text.size()) {
    if (text[i] == 'o' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
      std::size_t j = i + 1;
      std::uint64_t v = 0;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) v = v * 10 + (text[j++] - '0');
      ids.insert(v);
      i = j;
    } else {
      ++i;
    }
  }
  return ids;
}

BagOfTokensEmbedder::BagOfTokensEmbedder(Tokens tokens, std::size_t dim) : tokens_(tokens), dim_(dim) {
  if (dim_ == 0) throw Error(ErrorKind::invalid_input, "embedder dim must be >= 1");
}

std::string BagOfTokensEmbedder::id() const {
  return tokens_ == Tokens::words ? "mock-bow" : "mock-trigram";
}

std::vector<std::string> BagOfTokensEmbedder::tokenize(const std::string& text) const {
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  if (tokens_ == Tokens::words) return words;

  std::vector<std::string> grams;
  for (const auto& w : words) {
    if (w.size() < 3) {
      grams.push_back(w);
      continue;
    }
    for (std::size_t i = 0; i + 3 <= w.size(); ++i) grams.push_back(w.substr(i, 3));
  }
  return grams;
}

std::vector<double> BagOfTokensEmbedder::embed(const std::string& text) const {
  std::vector<double> v(dim_, 0.0);
  const std::string salt = tokens_ == Tokens::words ? "w:" : "t:";
  for (const auto& tok : tokenize(text)) v[digest_prefix_u64(sha256_hex(salt + tok)) % dim_] = 1.0;
  return v;
}

}  // namespace textxai
