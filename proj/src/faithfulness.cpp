#include "textxai/faithfulness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace textxai {

namespace {

std::int64_t tied_pairs_in_sorted(std::span<const double> sorted) {
  std::int64_t total = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    total += t * (t - 1) / 2;
    i = j;
  }
  return total;
}

// Sorts v ascending and returns the number of strict inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, scratch, lo, mid) + merge_count(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, out = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      scratch[out++] = v[j++];
    } else {
      scratch[out++] = v[i++];
    }
  }
  while (i < mid) scratch[out++] = v[i++];
  while (j < hi) scratch[out++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

TauResult kendall_tau(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) {
    throw Error(ErrorKind::invalid_input, "kendall_tau length mismatch: " + std::to_string(y.size()) + " vs " +
                                              std::to_string(y_hat.size()));
  }
  const std::size_t n = y.size();
  if (n < 2) throw Error(ErrorKind::invalid_input, "kendall_tau needs at least two elements");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(y[i]) || std::isnan(y_hat[i])) throw Error(ErrorKind::invalid_input, "kendall_tau input contains NaN");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return y[a] < y[b] || (y[a] == y[b] && y_hat[a] < y_hat[b]);
  });

  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  std::int64_t n1 = 0;  // pairs tied in y
  std::int64_t n3 = 0;  // pairs tied in both
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && y[order[j]] == y[order[i]]) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    n1 += t * (t - 1) / 2;
    for (std::size_t a = i; a < j;) {
      std::size_t b = a + 1;
      while (b < j && y_hat[order[b]] == y_hat[order[a]]) ++b;
      const auto u = static_cast<std::int64_t>(b - a);
      n3 += u * (u - 1) / 2;
      a = b;
    }
    i = j;
  }

  std::vector<double> second(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) second[i] = y_hat[order[i]];
  const std::int64_t discordant = merge_count(second, scratch, 0, n);
  const std::int64_t n2 = tied_pairs_in_sorted(second);  // pairs tied in y_hat

  const std::int64_t untied_y = n0 - n1;
  const std::int64_t untied_y_hat = n0 - n2;
  if (untied_y == 0 || untied_y_hat == 0) return {0.0, true};

  const std::int64_t numerator = n0 - n1 - n2 + n3 - 2 * discordant;
  const double denom = std::sqrt(static_cast<double>(untied_y) * static_cast<double>(untied_y_hat));
  const double tau = std::clamp(static_cast<double>(numerator) / denom, -1.0, 1.0);
  return {tau, false};
}

Matrix mask_top_k(const FeatureBundle& bundle, const ExplanationScores& scores, std::size_t k,
                  const Replacement& replacement) {
  if (scores.fragment_count() != bundle.fragment_count()) {
    throw Error(ErrorKind::invalid_input, "explanation covers " + std::to_string(scores.fragment_count()) +
                                              " fragments, bundle has " + std::to_string(bundle.fragment_count()));
  }
  if (k > bundle.fragment_count()) {
    throw Error(ErrorKind::out_of_range, "k=" + std::to_string(k) + " exceeds fragment count " +
                                             std::to_string(bundle.fragment_count()));
  }
  if (k == 0) return bundle.features();
  return replace_fragments(bundle.features(), bundle.fragments(), scores.top_k(k), replacement);
}

DiscResult disc_plus(const SummarizerBackend& backend, const FeatureBundle& bundle, const ExplanationScores& scores,
                     std::size_t k, const Replacement& replacement, const std::optional<ImportanceScores>& original) {
  const Matrix masked = mask_top_k(bundle, scores, k, replacement);
  const ImportanceScores y = original ? *original : score_frames(backend, bundle.features(), bundle.video_id());
  if (y.scores.size() != bundle.frame_count()) {
    throw Error(ErrorKind::invalid_input, "cached summarizer output does not match the bundle");
  }
  const ImportanceScores y_hat = score_frames(backend, masked, bundle.video_id());
  const TauResult tau = kendall_tau(y.scores, y_hat.scores);
  return {bundle.video_id(), scores.explainer(), k, tau.value, tau.degenerate};
}

}  // namespace textxai
