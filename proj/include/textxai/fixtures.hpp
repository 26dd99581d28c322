#pragma once

// Synthetic feature containers with matching keyframe stores and source
// videos, for tests and desk-scale demo runs. Each fragment gets its own
// random scene vector; frames are that vector plus small noise, so fragments
// are distinguishable and no feature value is exactly zero.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace textxai {

struct FixtureVideo {
  std::string key;
  std::vector<std::size_t> fragment_lengths;  // sampled frames per fragment
};

enum class ChangePointStyle {
  half_open_sampled,
  inclusive_sampled,
  inclusive_original,
};

struct FixtureOptions {
  std::size_t feature_dim = 16;
  std::uint64_t seed = 0;
  /// Original frames between consecutive sampled frames.
  std::size_t stride = 3;
  ChangePointStyle style = ChangePointStyle::inclusive_sampled;
  /// Write the "units" / "half_open" attributes instead of relying on detection.
  bool annotate = false;
  bool keyframes = true;
  bool source_videos = false;
  int image_size = 32;
  /// Datasets left out of every group, to build malformed containers.
  std::vector<std::string> omit_datasets;
};

struct FixturePaths {
  std::filesystem::path container;
  std::filesystem::path keyframe_root;
  std::filesystem::path video_dir;
};

/// `count` videos named video_1..video_count with F uniform in
/// [min_fragments, max_fragments] and fragment lengths in [2, 8].
std::vector<FixtureVideo> random_fixture_videos(std::size_t count, std::uint64_t seed, std::size_t min_fragments = 4,
                                                std::size_t max_fragments = 10);

/// Writes <dir>/features.h5, <dir>/keyframes/<key>/<index>.png and
/// <dir>/videos/<key>.avi according to the options.
FixturePaths write_fixture(const std::filesystem::path& dir, const std::vector<FixtureVideo>& videos,
                           const FixtureOptions& options = {});

}  // namespace textxai
