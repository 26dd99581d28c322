#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "textxai/model.hpp"

namespace textxai {

/// Frame rate of keyframe slideshows (the sampling rate of the features).
inline constexpr double kSlideshowFps = 2.0;

/// Cuts fragment clips into `<output_dir>/<digest>.avi` (MJPEG) with a
/// `<digest>.json` sidecar holding the frame digests. Clips are
/// content-addressed: an existing clip + sidecar is reused as is.
///
/// original_video cuts frames [picks[start], picks[end-1]] of every fragment
/// from the source file at its native rate. keyframe_slideshow concatenates
/// the stored keyframes of the sampled frames at 2 fps and is flagged
/// lower-fidelity.
class ClipExtractor {
 public:
  explicit ClipExtractor(std::filesystem::path output_dir);

  Clip extract(const FeatureBundle& bundle, std::vector<std::size_t> fragment_indices, ClipSource policy);

  /// Prefers the original video and falls back to the keyframe slideshow;
  /// throws clip_unavailable when neither source exists.
  Clip concat_fragments(const FeatureBundle& bundle, std::vector<std::size_t> fragment_indices);

  const std::filesystem::path& output_dir() const noexcept { return output_dir_; }

 private:
  std::string content_digest(const FeatureBundle& bundle, ClipSource policy);
  std::mutex& lock_for(const std::string& digest);

  std::filesystem::path output_dir_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
  std::map<std::string, std::string> source_digests_;
};

/// Digest of a clip: a pure function of the video content digest, the
/// sorted fragment indices and the source policy.
std::string clip_digest(const std::string& video_content_digest, const std::vector<std::size_t>& sorted_indices,
                        ClipSource policy);

/// Frames an original-video clip spans: sum of picks[end-1] - picks[start] + 1.
std::size_t original_clip_frame_count(const FeatureBundle& bundle, const std::vector<std::size_t>& fragment_indices);

}  // namespace textxai
