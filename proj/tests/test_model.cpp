#include <doctest.h>

#include "support.hpp"
#include "textxai/model.hpp"

using namespace textxai;
using testing::error_kind;

namespace {

BundleFields fields(std::vector<Fragment> fragments, std::size_t n) {
  BundleFields f;
  f.video_id = "v";
  f.features = Matrix(n, 2, 1.0);
  f.fragments = std::move(fragments);
  for (std::size_t i = 0; i < n; ++i) f.picks.push_back(static_cast<std::int64_t>(i * 15));
  return f;
}

}  // namespace

TEST_CASE("bundle accepts a contiguous partition") {
  const FeatureBundle b(fields({{0, 2}, {2, 5}, {5, 6}}, 6));
  CHECK(b.fragment_count() == 3);
  CHECK(b.frame_count() == 6);
  CHECK(b.feature_dim() == 2);
  CHECK(b.digest().size() == 64);
}

TEST_CASE("bundle rejects each broken invariant") {
  auto kind = [](BundleFields f) { return error_kind([&] { FeatureBundle b(std::move(f)); }); };
  CHECK(kind(fields({{0, 2}, {3, 6}}, 6)) == ErrorKind::invariant_violation);   // gap
  CHECK(kind(fields({{0, 3}, {2, 6}}, 6)) == ErrorKind::invariant_violation);   // overlap
  CHECK(kind(fields({{1, 3}, {3, 6}}, 6)) == ErrorKind::invariant_violation);   // uncovered head
  CHECK(kind(fields({{0, 3}, {3, 5}}, 6)) == ErrorKind::invariant_violation);   // uncovered tail
  CHECK(kind(fields({{0, 3}, {3, 3}, {3, 6}}, 6)) == ErrorKind::invariant_violation);  // empty
  CHECK(kind(fields({}, 6)) == ErrorKind::invariant_violation);

  auto f = fields({{0, 6}}, 6);
  f.picks[3] = f.picks[2];
  CHECK(kind(f) == ErrorKind::invariant_violation);

  f = fields({{0, 6}}, 6);
  f.picks.pop_back();
  CHECK(kind(f) == ErrorKind::invariant_violation);

  f = fields({{0, 6}}, 6);
  f.features(4, 1) = std::nan("");
  CHECK(kind(f) == ErrorKind::invariant_violation);
}

TEST_CASE("bundle error names the offending fragment") {
  try {
    FeatureBundle b(fields({{0, 2}, {2, 4}, {5, 6}}, 6));
    FAIL("expected a violation");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("fragment 2") != std::string::npos);
  }
}

TEST_CASE("bundle digest depends on content only") {
  const FeatureBundle a(fields({{0, 3}, {3, 6}}, 6));
  const FeatureBundle b(fields({{0, 3}, {3, 6}}, 6));
  const FeatureBundle c(fields({{0, 2}, {2, 6}}, 6));
  CHECK(a.digest() == b.digest());
  CHECK(a.digest() != c.digest());
}

TEST_CASE("importance scores must lie in [0, 1]") {
  CHECK_NOTHROW(ImportanceScores("v", {0.0, 0.5, 1.0}));
  CHECK(error_kind([] { ImportanceScores("v", {0.2, 1.01}); }) == ErrorKind::invariant_violation);
  CHECK(error_kind([] { ImportanceScores("v", {-0.1}); }) == ErrorKind::invariant_violation);
  CHECK(error_kind([] { ImportanceScores("v", {std::nan("")}); }) == ErrorKind::invariant_violation);
}

TEST_CASE("explanation ranking is descending with earlier index first on ties") {
  const ExplanationScores s(ExplainerId::lime, {0.1, 0.7, 0.3, 0.7, -0.2});
  CHECK(s.ranking() == std::vector<std::size_t>{1, 3, 2, 0, 4});
  CHECK(s.top_k(1) == std::vector<std::size_t>{1});
  CHECK(s.top_k(3) == std::vector<std::size_t>{1, 3, 2});
  CHECK(error_kind([&] { (void)s.top_k(0); }) == ErrorKind::out_of_range);
  CHECK(error_kind([&] { (void)s.top_k(6); }) == ErrorKind::out_of_range);
}

TEST_CASE("perturbation masks keep and drop at least one fragment") {
  CHECK(PerturbationMask({true, false, true}).kept_count() == 2);
  CHECK(error_kind([] { PerturbationMask({true, true}); }) == ErrorKind::invariant_violation);
  CHECK(error_kind([] { PerturbationMask({false, false}); }) == ErrorKind::invariant_violation);
}

TEST_CASE("summary selection is distinct, ascending and in range") {
  CHECK_NOTHROW(SummarySelection({0, 2, 4}, 5));
  CHECK(error_kind([] { SummarySelection({2, 0}, 5); }) == ErrorKind::invariant_violation);
  CHECK(error_kind([] { SummarySelection({1, 1}, 5); }) == ErrorKind::invariant_violation);
  CHECK(error_kind([] { SummarySelection({5}, 5); }) == ErrorKind::invariant_violation);
}

TEST_CASE("text artifacts are never empty") {
  CHECK(error_kind([] { TextArtifact(TextKind::summary_description, "", "describe_v1", "d"); }) ==
        ErrorKind::empty_response);
}

TEST_CASE("enum names round-trip") {
  for (auto e : {ExplainerId::lime, ExplainerId::attention, ExplainerId::random, ExplainerId::fixed}) {
    CHECK(explainer_from_string(to_string(e)) == e);
  }
  for (auto a : {ApproachId::approach1, ApproachId::approach2, ApproachId::not_applicable}) {
    CHECK(approach_from_string(to_string(a)) == a);
  }
  CHECK(approach_from_string("2") == ApproachId::approach2);
  CHECK(error_kind([] { explainer_from_string("gradcam"); }) == ErrorKind::config_error);
}

TEST_CASE("evaluation record JSON round-trip") {
  EvaluationRecord r;
  r.video_id = "video_7";
  r.dataset_id = "tvsum";
  r.explainer = ExplainerId::lime;
  r.k = 3;
  r.approach = ApproachId::approach2;
  r.disc_plus = -0.125;
  r.plausibility = {{"a", 0.25}, {"b", 0.0}};
  r.plausibility_raw = {{"a", 0.25}, {"b", -0.5}};
  r.summary_fragments = {1, 4, 9};
  r.explanation_fragments = {0, 4, 7};
  r.overlap_fraction = 1.0 / 3.0;
  r.flags = {"ridge_fallback"};
  r.seed = 18446744073709551615ULL;
  r.config_digest = "abc";
  const auto back = nlohmann::json::parse(nlohmann::json(r).dump()).get<EvaluationRecord>();
  CHECK(back == r);

  r.disc_plus.reset();
  CHECK(nlohmann::json(r).at("disc_plus").is_null());
  CHECK(nlohmann::json(r).get<EvaluationRecord>() == r);
}

TEST_CASE("evaluation record range checks") {
  EvaluationRecord r;
  r.disc_plus = 1.5;
  CHECK(error_kind([&] { r.validate(); }) == ErrorKind::invariant_violation);
  r.disc_plus = 0.5;
  r.plausibility["e"] = -0.1;
  CHECK(error_kind([&] { r.validate(); }) == ErrorKind::invariant_violation);
  r.plausibility["e"] = 0.0;
  r.plausibility_raw["e"] = -0.4;
  CHECK_NOTHROW(r.validate());
}
