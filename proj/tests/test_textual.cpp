#include <doctest.h>

#include <chrono>
#include <fstream>
#include <thread>

#include "support.hpp"
#include "textxai/dataset.hpp"
#include "textxai/digest.hpp"
#include "textxai/fixtures.hpp"
#include "textxai/mock_backends.hpp"
#include "textxai/textual.hpp"

using namespace textxai;
using testing::error_kind;

namespace {

struct Dataset {
  testing::TempDir dir;
  FeatureBundle bundle;

  Dataset() : bundle(load()) {}

  FeatureBundle load() {
    const auto paths = write_fixture(dir.path(), {{"video_1", {3, 2, 4, 2, 3, 2}}});
    return load_bundle(paths.container, "video_1", {std::nullopt, paths.keyframe_root});
  }
};

Dataset& dataset() {
  static Dataset d;
  return d;
}

// Mock captioner whose caption calls finish in an order unrelated to the
// request order.
class Jittery final : public CaptionerBackend {
 public:
  explicit Jittery(std::size_t concurrency) : concurrency_(concurrency) {}
  std::string id() const override { return "jittery"; }
  std::size_t max_concurrency() const override { return concurrency_; }
  std::string caption(const Clip& clip, const std::string& prompt) const override {
    std::this_thread::sleep_for(std::chrono::milliseconds(digest_prefix_u64(clip.digest) % 30));
    return inner_.caption(clip, prompt);
  }
  std::string summarize(std::span<const std::string> d, const std::string& p) const override {
    return inner_.summarize(d, p);
  }

 private:
  std::size_t concurrency_;
  MockCaptioner inner_;
};

class FailsOn final : public CaptionerBackend {
 public:
  explicit FailsOn(std::size_t fragment) : fragment_(fragment) {}
  std::string id() const override { return "fails-on"; }
  std::string caption(const Clip& clip, const std::string& prompt) const override {
    if (clip.fragment_indices == std::vector<std::size_t>{fragment_}) throw std::runtime_error("gpu fault");
    return MockCaptioner().caption(clip, prompt);
  }
  std::string summarize(std::span<const std::string> d, const std::string& p) const override {
    return MockCaptioner().summarize(d, p);
  }

 private:
  std::size_t fragment_;
};

// Records the descriptions handed to summarize().
class Recording final : public CaptionerBackend {
 public:
  std::string id() const override { return "recording"; }
  std::string caption(const Clip& clip, const std::string& prompt) const override {
    return MockCaptioner().caption(clip, prompt);
  }
  std::string summarize(std::span<const std::string> d, const std::string& p) const override {
    seen.assign(d.begin(), d.end());
    prompt = p;
    return MockCaptioner().summarize(d, p);
  }
  mutable std::vector<std::string> seen;
  mutable std::string prompt;
};

}  // namespace

TEST_CASE("built-in prompts are byte-exact") {
  const PromptRegistry r;
  CHECK(r.get("describe_v1") ==
        "Describe the most prominent objects and events in the video, in 3 sentences. Don't mention background "
        "details.");
  CHECK(r.get("merge_v1") ==
        "Write a brief summary that covers all 3 descriptions equally. Avoid assumptions and background details.");
  CHECK(r.merge_prompt(3) == r.get("merge_v1"));
  CHECK(r.merge_prompt(1) ==
        "Write a brief summary that covers all 1 descriptions equally. Avoid assumptions and background details.");
  CHECK(r.merge_prompt(12).find("covers all 12 descriptions") != std::string::npos);
  CHECK(error_kind([&] { (void)r.get("describe_v2"); }) == ErrorKind::invalid_input);
}

TEST_CASE("prompt registry files") {
  testing::TempDir dir;
  std::ofstream(dir / "ok.json") << R"({"describe_v1": ")" << kDescribePrompt << R"(", "terse_v1": "Describe."})";
  const auto r = PromptRegistry::from_file(dir / "ok.json");
  CHECK(r.get("terse_v1") == "Describe.");
  CHECK(r.get("describe_v1") == kDescribePrompt);

  std::ofstream(dir / "conflict.json") << R"({"describe_v1": "Describe the video."})";
  CHECK(error_kind([&] { (void)PromptRegistry::from_file(dir / "conflict.json"); }) == ErrorKind::config_error);
  std::ofstream(dir / "bad.json") << R"(["not", "an", "object"])";
  CHECK(error_kind([&] { (void)PromptRegistry::from_file(dir / "bad.json"); }) == ErrorKind::config_error);
  CHECK(error_kind([&] { (void)PromptRegistry::from_file(dir / "missing.json"); }) == ErrorKind::config_error);
}

TEST_CASE("approach 1 captions the fragments in temporal order") {
  auto& d = dataset();
  testing::TempDir clips_dir;
  ClipExtractor clips(clips_dir.path());
  const MockCaptioner cap;
  const PromptRegistry prompts;
  const auto a = describe_approach1(cap, d.bundle, {4, 0, 2}, prompts, clips);
  const auto b = describe_approach1(cap, d.bundle, {0, 2, 4}, prompts, clips);
  CHECK(a.text == b.text);
  CHECK(a.source_clip_digest == b.source_clip_digest);
  CHECK(a.prompt_id == "describe_v1");
  CHECK(a.kind == TextKind::explanation_description);
  const Clip clip = clips.concat_fragments(d.bundle, {0, 2, 4});
  CHECK(clip.fragment_indices == std::vector<std::size_t>{0, 2, 4});
  CHECK(clip.digest == a.source_clip_digest);
}

TEST_CASE("approach 2 merges per-fragment descriptions") {
  auto& d = dataset();
  testing::TempDir clips_dir;
  ClipExtractor clips(clips_dir.path());
  const Recording cap;
  const PromptRegistry prompts;
  const auto res = describe_approach2(cap, d.bundle, {5, 1, 3}, prompts, clips);
  REQUIRE(res.fragments.size() == 3);
  std::set<std::uint64_t> union_ids;
  const std::vector<std::size_t> order{1, 3, 5};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(res.fragments[i].kind == TextKind::fragment_description);
    CHECK(res.fragments[i].source_clip_digest == clips.concat_fragments(d.bundle, {order[i]}).digest);
    CHECK(cap.seen[i] == res.fragments[i].text);
    union_ids.merge(MockCaptioner::object_ids(res.fragments[i].text));
  }
  CHECK(res.merged.kind == TextKind::merged_description);
  CHECK(res.merged.prompt_id == "merge_v1");
  CHECK(cap.prompt == std::string(kMergePrompt));
  CHECK(MockCaptioner::object_ids(res.merged.text) == union_ids);

  (void)describe_approach2(cap, d.bundle, {2}, prompts, clips);
  CHECK(cap.prompt == prompts.merge_prompt(1));
}

TEST_CASE("approach 2 output does not depend on caption completion order") {
  auto& d = dataset();
  testing::TempDir clips_dir;
  ClipExtractor clips(clips_dir.path());
  const PromptRegistry prompts;
  const auto serial = describe_approach2(Jittery(1), d.bundle, {0, 1, 2, 3, 4, 5}, prompts, clips);
  for (int rep = 0; rep < 3; ++rep) {
    const auto parallel = describe_approach2(Jittery(0), d.bundle, {0, 1, 2, 3, 4, 5}, prompts, clips);
    CHECK(parallel.merged.text == serial.merged.text);
    CHECK(parallel.merged.source_clip_digest == serial.merged.source_clip_digest);
    for (std::size_t i = 0; i < 6; ++i) CHECK(parallel.fragments[i].text == serial.fragments[i].text);
  }
}

TEST_CASE("a failed fragment caption fails approach 2") {
  auto& d = dataset();
  testing::TempDir clips_dir;
  ClipExtractor clips(clips_dir.path());
  const PromptRegistry prompts;
  CHECK(error_kind([&] { (void)describe_approach2(FailsOn(3), d.bundle, {1, 3}, prompts, clips); }) ==
        ErrorKind::backend_error);
  CHECK_NOTHROW(describe_approach2(FailsOn(3), d.bundle, {1, 2}, prompts, clips));
}

TEST_CASE("summary and explanation texts coincide for identical fragment sets") {
  auto& d = dataset();
  testing::TempDir clips_dir;
  ClipExtractor clips(clips_dir.path());
  const MockCaptioner cap;
  const PromptRegistry prompts;
  const SummarySelection summary({1, 4}, d.bundle.fragment_count());
  const auto s = describe_summary(cap, d.bundle, summary, prompts, clips);
  const auto e = describe_approach1(cap, d.bundle, {4, 1}, prompts, clips);
  CHECK(s.kind == TextKind::summary_description);
  CHECK(s.text == e.text);
}

TEST_CASE("fragment index validation") {
  auto& d = dataset();
  testing::TempDir clips_dir;
  ClipExtractor clips(clips_dir.path());
  const MockCaptioner cap;
  const PromptRegistry prompts;
  CHECK(error_kind([&] { (void)describe_approach1(cap, d.bundle, {}, prompts, clips); }) == ErrorKind::invalid_input);
  CHECK(error_kind([&] { (void)describe_approach1(cap, d.bundle, {1, 1}, prompts, clips); }) ==
        ErrorKind::invalid_input);
  CHECK(error_kind([&] { (void)describe_approach2(cap, d.bundle, {6}, prompts, clips); }) == ErrorKind::out_of_range);
}
