#pragma once

// Feature-container ingestion. Containers follow the HDF5 layout of the
// public video-summarization feature releases: one group per video holding
//   features       n x D   frame features of the sampled frames
//   change_points  F x 2   fragment boundaries
//   picks          n       original-frame index of each sampled frame
//   n_frames       scalar  frame count of the original video
//
// change_points may be inclusive or half-open, and may be expressed in
// sampled or original frame units; optional attributes "units"
// ("sampled" | "original") and "half_open" (0 | 1) on the dataset override
// detection. Loaded fragments are always half-open sampled-frame ranges, and
// the detected convention is recorded in the bundle metadata.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "textxai/model.hpp"

namespace textxai {

struct LoadOptions {
  /// Directory holding original videos named <video_key>.<ext>.
  std::optional<std::filesystem::path> video_dir;
  /// Directory holding keyframe stores at <root>/<video_key>/<index>.png.
  std::optional<std::filesystem::path> keyframe_root;
};

/// Video keys of a container, in natural order (video_2 before video_10).
std::vector<std::string> list_videos(const std::filesystem::path& container);

/// SHA-256 of the container file (memoised per path, size and mtime).
std::string container_digest(const std::filesystem::path& container);

FeatureBundle load_bundle(const std::filesystem::path& container, const std::string& video_key,
                          const LoadOptions& options = {});

}  // namespace textxai
