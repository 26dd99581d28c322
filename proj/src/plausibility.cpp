#include "textxai/plausibility.hpp"

#include <algorithm>
#include <cmath>

#include "textxai/parallel.hpp"

namespace textxai {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::invalid_input, "cosine of vectors with different lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::undefined_similarity, "cosine with a zero vector");
  // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): for a == b it returns na
  // exactly, so identical vectors score exactly 1.
  const double c = dot / std::sqrt(na * nb);
  if (!std::isfinite(c)) throw Error(ErrorKind::undefined_similarity, "non-finite cosine");
  return std::clamp(c, -1.0, 1.0);
}

PlausibilityResult plausibility_score(std::span<const std::shared_ptr<const EmbedderBackend>> embedders,
                                      const TextArtifact& explanation, const TextArtifact& summary) {
  PlausibilityResult result;
  std::vector<EmbedderScore> scores(embedders.size());
  parallel_for(embedders.size(), 0, [&](std::size_t i) {
    const EmbedderBackend& e = *embedders[i];
    try {
      const auto a = embed_text(e, explanation.text);
      const auto b = embed_text(e, summary.text);
      scores[i].raw_cosine = cosine_similarity(a, b);
      scores[i].reported = std::max(scores[i].raw_cosine, 0.0);
    } catch (const std::exception& ex) {
      scores[i].error = ex.what();
    }
  });
  for (std::size_t i = 0; i < embedders.size(); ++i) result.per_embedder[embedders[i]->id()] = scores[i];
  return result;
}

}  // namespace textxai
