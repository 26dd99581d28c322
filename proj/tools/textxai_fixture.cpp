// Writes a synthetic dataset (features container, keyframes, optional source
// videos) plus a mock-backend config that runs end to end.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "textxai/fixtures.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic feature container and a matching run config"};
  std::string out;
  std::size_t videos = 5, min_fragments = 4, max_fragments = 10, dim = 16;
  std::uint64_t seed = 0;
  bool source_videos = false;
  std::size_t lime_masks = 2000;
  app.add_option("-o,--out", out, "Output directory")->required();
  app.add_option("--videos", videos, "Number of videos");
  app.add_option("--min-fragments", min_fragments, "Fewest fragments per video");
  app.add_option("--max-fragments", max_fragments, "Most fragments per video");
  app.add_option("--dim", dim, "Feature dimension");
  app.add_option("--seed", seed, "Fixture seed");
  app.add_option("--masks", lime_masks, "Perturbation masks (M) in the generated config");
  app.add_flag("--source-videos", source_videos, "Also write original videos");
  CLI11_PARSE(app, argc, argv);

  try {
    textxai::FixtureOptions opts;
    opts.feature_dim = dim;
    opts.seed = seed;
    opts.source_videos = source_videos;
    const auto paths = textxai::write_fixture(
        out, textxai::random_fixture_videos(videos, seed, min_fragments, max_fragments), opts);

    nlohmann::json config{{"dataset_id", "synthetic"},
                          {"container", "features.h5"},
                          {"keyframe_dir", "keyframes"},
                          {"explainers", {"attention", "lime"}},
                          {"explainer", {{"M", lime_masks}}},
                          {"k", {1, 3}},
                          {"approaches", {"approach1", "approach2"}},
                          {"seed", 0},
                          {"video_set", 1},
                          {"output_dir", "run"}};
    if (source_videos) config["video_dir"] = "videos";
    std::ofstream(std::filesystem::path(out) / "config.json") << config.dump(2) << '\n';
    std::cout << "container: " << paths.container.string() << "\n"
              << "config:    " << (std::filesystem::path(out) / "config.json").string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
