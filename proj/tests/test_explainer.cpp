#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "support.hpp"
#include "textxai/explainer.hpp"
#include "textxai/faithfulness.hpp"
#include "textxai/mock_backends.hpp"

using namespace textxai;
using testing::error_kind;

namespace {

// Kernel weight written out from its definition.
double kernel(std::size_t kept, std::size_t f, double sigma) {
  const double d = 1.0 - static_cast<double>(kept) / static_cast<double>(f);
  return std::exp(-d * d / (sigma * sigma));
}

}  // namespace

TEST_CASE("sampled masks are a pure function of the configuration") {
  ExplainerConfig c;
  c.M = 500;
  c.seed = 42;
  const auto a = sample_masks(7, c), b = sample_masks(7, c);
  CHECK(a == b);
  c.seed = 43;
  CHECK(sample_masks(7, c) != a);
}

TEST_CASE("sampled masks are never degenerate and keep about half the fragments") {
  ExplainerConfig c;
  c.M = 4000;
  c.seed = 1;
  const auto masks = sample_masks(6, c);
  REQUIRE(masks.size() == 4000);
  double kept = 0.0;
  for (const auto& m : masks) {
    CHECK(m.kept_count() >= 1);
    CHECK(m.kept_count() <= 5);
    kept += static_cast<double>(m.kept_count());
  }
  // Conditional on 1..5 of 6 kept, E[kept] = 3; sd of the mean < 0.02.
  CHECK(kept / 4000.0 == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("exhaustive enumeration lists every legal mask once") {
  for (std::size_t f = 2; f <= 8; ++f) {
    const auto masks = enumerate_masks(f);
    CHECK(masks.size() == (std::size_t{1} << f) - 2);
    std::set<std::vector<bool>> unique;
    for (const auto& m : masks) unique.insert(m.kept());
    CHECK(unique.size() == masks.size());
  }
  CHECK(error_kind([] { (void)enumerate_masks(1); }) == ErrorKind::invalid_input);
}

TEST_CASE("kernel weight follows exp(-(1 - kept/F)^2 / sigma^2)") {
  const PerturbationMask m({true, false, false, true});
  CHECK(mask_weight(m, 0.25) == doctest::Approx(std::exp(-0.25 / 0.0625)).epsilon(1e-15));
}

TEST_CASE("rank fidelity: identical outputs score 1, constant perturbed output scores 0") {
  const std::vector<double> y{0.1, 0.5, 0.3}, c{0.2, 0.2, 0.2};
  CHECK(rank_fidelity(y, y) == 1.0);
  CHECK(rank_fidelity(c, c) == 1.0);
  CHECK(rank_fidelity(y, c) == 0.0);
  const std::vector<double> r{0.3, 0.1, 0.2};
  CHECK(rank_fidelity(y, r) == kendall_tau(y, r).value);
}

TEST_CASE("surrogate equals exact weighted least squares over all masks") {
  ExplainerConfig c;
  c.ridge_lambda = 0.0;
  c.mask_scheme = MaskScheme::exhaustive;
  for (std::size_t f = 3; f <= 8; ++f) {
    std::mt19937_64 rng(f);
    const auto bundle = testing::make_bundle(testing::random_lengths(f, rng, 2, 4), 2, f);
    const testing::MaskHashSummarizer backend(bundle.fragments());
    const auto scores = explain_lime(backend, bundle, c);

    const auto masks = enumerate_masks(f);
    const auto y = backend.score(bundle.features());
    std::vector<std::vector<double>> z;
    std::vector<double> t, w;
    for (const auto& m : masks) {
      std::vector<double> row;
      for (std::size_t i = 0; i < f; ++i) row.push_back(m[i] ? 1.0 : 0.0);
      z.push_back(row);
      const auto y_hat = backend.score(apply_replacement(bundle.features(), bundle.fragments(), m, {}));
      t.push_back(rank_fidelity(y, y_hat));
      w.push_back(kernel(m.kept_count(), f, c.kernel_sigma));
    }
    const auto expect = testing::wls_oracle(z, t, w);
    CHECK_FALSE(scores.ridge_fallback);
    for (std::size_t i = 0; i < f; ++i) CHECK(std::abs(scores.per_fragment()[i] - expect[i]) <= 1e-9);
  }
}

TEST_CASE("ridge penalises coefficients but not the intercept") {
  // Targets = 2 + 3 z_0: a heavy ridge shrinks the slope, the intercept
  // absorbs the mean.
  const auto masks = enumerate_masks(3);
  std::vector<double> t;
  for (const auto& m : masks) t.push_back(2.0 + (m[0] ? 3.0 : 0.0));
  ExplainerConfig c;
  c.ridge_lambda = 0.0;
  auto exact = fit_surrogate(masks, t, c);
  CHECK(exact.coefficients[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(exact.coefficients[1]) < 1e-12);
  CHECK(exact.intercept == doctest::Approx(2.0).epsilon(1e-12));
  c.ridge_lambda = 1e3;
  auto shrunk = fit_surrogate(masks, t, c);
  CHECK(shrunk.coefficients[0] < 0.1);
  double wsum = 0.0, wt = 0.0;
  for (std::size_t s = 0; s < masks.size(); ++s) {
    wsum += mask_weight(masks[s], c.kernel_sigma);
    wt += mask_weight(masks[s], c.kernel_sigma) * t[s];
  }
  CHECK(shrunk.intercept == doctest::Approx(wt / wsum).epsilon(1e-3));
}

TEST_CASE("singular designs fall back to the ridge floor and are flagged") {
  const auto bundle = testing::make_bundle({3, 3});
  const testing::MaskHashSummarizer backend(bundle.fragments());
  ExplainerConfig c;
  c.ridge_lambda = 0.0;
  c.mask_scheme = MaskScheme::exhaustive;
  const auto s = explain_lime(backend, bundle, c);
  CHECK(s.ridge_fallback);
  for (double v : s.per_fragment()) CHECK(std::isfinite(v));

  c.ridge_lambda = 1e-3;
  CHECK_FALSE(explain_lime(backend, bundle, c).ridge_fallback);
}

TEST_CASE("a summarizer that ignores its input gets zero influence everywhere") {
  const auto bundle = testing::make_bundle({2, 3, 4, 2});
  const ConstantSummarizer backend(0.4);
  ExplainerConfig c;
  c.M = 300;
  const auto s = explain_lime(backend, bundle, c);
  for (double v : s.per_fragment()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("lime recovers the planted fragment") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto bundle = testing::make_bundle(testing::random_lengths(10, rng), 4, seed);
    const std::size_t planted = seed % 10;
    const PlantedSummarizer backend(bundle.fragments(), planted);
    ExplainerConfig c;
    c.M = 500;
    c.seed = seed;
    CHECK(explain_lime(backend, bundle, c).top_k(1).front() == planted);
  }
}

TEST_CASE("lime is independent of backend concurrency") {
  class Serial final : public SummarizerBackend {
   public:
    std::string id() const override { return "serial"; }
    std::size_t max_concurrency() const override { return 1; }
    std::vector<double> score(const Matrix& f) const override { return inner.score(f); }
    AttentionMockSummarizer inner;
  };
  const auto bundle = testing::make_bundle({3, 2, 4, 3, 2, 5}, 8, 4);
  ExplainerConfig c;
  c.M = 400;
  c.seed = 9;
  const auto parallel = explain_lime(AttentionMockSummarizer(), bundle, c);
  const auto serial = explain_lime(Serial(), bundle, c);
  CHECK(parallel.per_fragment() == serial.per_fragment());
}

TEST_CASE("lime replacement must agree with the configuration") {
  const auto bundle = testing::make_bundle({3, 2, 4});
  ExplainerConfig c;
  c.M = 50;
  c.replacement = ReplacementMode::dataset_mean;
  CHECK(error_kind([&] { (void)explain_lime(AttentionMockSummarizer(), bundle, c, Replacement::zeros()); }) ==
        ErrorKind::invalid_input);
  CHECK_NOTHROW(explain_lime(AttentionMockSummarizer(), bundle, c, Replacement::dataset_mean({1, 1, 1, 1})));
}

TEST_CASE("lime needs two fragments") {
  const auto bundle = testing::make_bundle({5});
  CHECK(error_kind([&] { (void)explain_lime(AttentionMockSummarizer(), bundle, ExplainerConfig{}); }) ==
        ErrorKind::invalid_input);
}

TEST_CASE("attention explanation is the per-fragment mean of the signal") {
  const auto bundle = testing::make_bundle({2, 3, 1});
  const FixedSignalSummarizer backend({0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, {1.0, 3.0, 0.0, 0.0, 6.0, 0.5});
  const auto s = explain_attention(backend, bundle);
  CHECK(s.per_fragment()[0] == 2.0);
  CHECK(s.per_fragment()[1] == 2.0);
  CHECK(s.per_fragment()[2] == 0.5);
  CHECK(s.explainer() == ExplainerId::attention);
}

TEST_CASE("attention explanation requires the capability") {
  const auto bundle = testing::make_bundle({2, 3});
  const FixedSignalSummarizer backend(std::vector<double>(5, 0.5), {});
  CHECK(error_kind([&] { (void)explain_attention(backend, bundle); }) == ErrorKind::unsupported_capability);
}

TEST_CASE("attention on the planted mock ranks the planted fragment first") {
  const auto bundle = testing::make_bundle({3, 4, 2, 5, 3});
  const PlantedSummarizer backend(bundle.fragments(), 3);
  CHECK(explain_attention(backend, bundle).top_k(1).front() == 3);
}

TEST_CASE("random explainer is seeded") {
  CHECK(explain_random(6, 1).per_fragment() == explain_random(6, 1).per_fragment());
  CHECK(explain_random(6, 1).per_fragment() != explain_random(6, 2).per_fragment());
}

TEST_CASE("explainer config validation and JSON") {
  ExplainerConfig c;
  CHECK(c.M == 20000);
  CHECK(c.keep_probability == 0.5);
  CHECK(c.kernel_sigma == 0.25);
  c.keep_probability = 1.0;
  CHECK(error_kind([&] { c.validate(); }) == ErrorKind::config_error);
  c = ExplainerConfig{};
  c.M = 123;
  c.mask_scheme = MaskScheme::exhaustive;
  c.replacement = ReplacementMode::dataset_mean;
  const auto back = nlohmann::json(c).get<ExplainerConfig>();
  CHECK(back.M == 123);
  CHECK(back.mask_scheme == MaskScheme::exhaustive);
  CHECK(back.replacement == ReplacementMode::dataset_mean);
}
