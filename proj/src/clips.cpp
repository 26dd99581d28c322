#include "textxai/clips.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "textxai/digest.hpp"

namespace fs = std::filesystem;

namespace textxai {

namespace {

std::string frame_digest(const cv::Mat& frame) {
  cv::Mat m = frame.isContinuous() ? frame : frame.clone();
  Sha256 h;
  h.update_u64(static_cast<std::uint64_t>(m.rows));
  h.update_u64(static_cast<std::uint64_t>(m.cols));
  h.update_u64(static_cast<std::uint64_t>(m.type()));
  h.update(std::string_view(reinterpret_cast<const char*>(m.data), m.total() * m.elemSize()));
  return h.hex();
}

std::optional<fs::path> keyframe_path(const fs::path& dir, std::size_t index) {
  char name[32];
  for (const char* ext : {"png", "jpg"}) {
    std::snprintf(name, sizeof name, "%06zu.%s", index, ext);
    if (fs::path p = dir / name; fs::exists(p)) return p;
  }
  return std::nullopt;
}

std::vector<std::size_t> normalize_indices(const FeatureBundle& bundle, std::vector<std::size_t> indices) {
  if (indices.empty()) throw Error(ErrorKind::invalid_input, "clip needs at least one fragment");
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  if (indices.back() >= bundle.fragment_count()) {
    throw Error(ErrorKind::out_of_range, "fragment index " + std::to_string(indices.back()) + " out of range");
  }
  return indices;
}

std::optional<Clip> read_sidecar(const fs::path& video, const fs::path& sidecar, const std::string& digest) {
  if (!fs::exists(video) || !fs::exists(sidecar)) return std::nullopt;
  std::ifstream in(sidecar);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("digest", "") != digest) return std::nullopt;
  Clip clip;
  clip.digest = digest;
  clip.path = video;
  clip.fragment_indices = j.at("fragment_indices").get<std::vector<std::size_t>>();
  clip.frame_digests = j.at("frame_digests").get<std::vector<std::string>>();
  clip.source = j.at("source").get<std::string>() == "original_video" ? ClipSource::original_video
                                                                         : ClipSource::keyframe_slideshow;
  clip.fps = j.at("fps").get<double>();
  clip.lower_fidelity = j.at("lower_fidelity").get<bool>();
  return clip;
}

void write_atomic(const fs::path& target, const std::string& bytes) {
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out) throw Error(ErrorKind::clip_unavailable, "cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
}

class ClipWriter {
 public:
  ClipWriter(fs::path tmp, double fps) : tmp_(std::move(tmp)), fps_(fps) {}

  void add(const cv::Mat& frame) {
    cv::Mat f = frame;
    if (!writer_.isOpened()) {
      size_ = frame.size();
      writer_.open(tmp_.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), fps_, size_, true);
      if (!writer_.isOpened()) throw Error(ErrorKind::clip_unavailable, "cannot open clip writer " + tmp_.string());
    } else if (frame.size() != size_) {
      cv::resize(frame, f, size_);
    }
    writer_.write(f);
  }

  void finish() { writer_.release(); }

 private:
  fs::path tmp_;
  double fps_;
  cv::VideoWriter writer_;
  cv::Size size_;
};

}  // namespace

std::string clip_digest(const std::string& video_content_digest, const std::vector<std::size_t>& sorted_indices,
                        ClipSource policy) {
  Sha256 h;
  h.field("clip/v1");
  h.field(video_content_digest);
  h.field(to_string(policy));
  h.update_u64(sorted_indices.size());
  for (auto i : sorted_indices) h.update_u64(i);
  return h.hex();
}

std::size_t original_clip_frame_count(const FeatureBundle& bundle, const std::vector<std::size_t>& fragment_indices) {
  std::size_t total = 0;
  for (auto i : fragment_indices) {
    const Fragment& fr = bundle.fragments().at(i);
    total += static_cast<std::size_t>(bundle.picks()[fr.end - 1] - bundle.picks()[fr.start] + 1);
  }
  return total;
}

ClipExtractor::ClipExtractor(fs::path output_dir) : output_dir_(std::move(output_dir)) {
  fs::create_directories(output_dir_);
}

std::mutex& ClipExtractor::lock_for(const std::string& digest) {
  std::lock_guard lock(mu_);
  auto& slot = locks_[digest];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::string ClipExtractor::content_digest(const FeatureBundle& bundle, ClipSource policy) {
  const std::string key = bundle.digest() + "|" + std::string(to_string(policy));
  {
    std::lock_guard lock(mu_);
    if (auto it = source_digests_.find(key); it != source_digests_.end()) return it->second;
  }
  Sha256 h;
  h.field(bundle.digest());
  if (policy == ClipSource::original_video) {
    h.field(sha256_file(*bundle.source_path()));
  } else {
    for (std::size_t r = 0; r < bundle.frame_count(); ++r) {
      auto p = keyframe_path(*bundle.keyframe_dir(), r);
      if (!p) throw Error(ErrorKind::clip_unavailable, bundle.video_id() + ": keyframe " + std::to_string(r) + " missing");
      h.field(sha256_file(*p));
    }
  }
  auto digest = h.hex();
  std::lock_guard lock(mu_);
  source_digests_[key] = digest;
  return digest;
}

Clip ClipExtractor::extract(const FeatureBundle& bundle, std::vector<std::size_t> fragment_indices,
                            ClipSource policy) {
  const auto indices = normalize_indices(bundle, std::move(fragment_indices));
  if (policy == ClipSource::original_video && !(bundle.source_path() && fs::exists(*bundle.source_path()))) {
    throw Error(ErrorKind::clip_unavailable, bundle.video_id() + ": original video not available");
  }
  if (policy == ClipSource::keyframe_slideshow && !bundle.keyframe_dir()) {
    throw Error(ErrorKind::clip_unavailable, bundle.video_id() + ": keyframe store not available");
  }

  const std::string digest = clip_digest(content_digest(bundle, policy), indices, policy);
  std::lock_guard lock(lock_for(digest));
  const fs::path video = output_dir_ / (digest + ".avi");
  const fs::path sidecar = output_dir_ / (digest + ".json");
  if (auto cached = read_sidecar(video, sidecar, digest)) return *cached;

  Clip clip;
  clip.digest = digest;
  clip.path = video;
  clip.fragment_indices = indices;
  clip.source = policy;
  clip.lower_fidelity = policy == ClipSource::keyframe_slideshow;

  const fs::path tmp = output_dir_ / (digest + ".tmp.avi");
  if (policy == ClipSource::original_video) {
    cv::VideoCapture cap(bundle.source_path()->string());
    if (!cap.isOpened()) throw Error(ErrorKind::clip_unavailable, "cannot decode " + bundle.source_path()->string());
    double fps = cap.get(cv::CAP_PROP_FPS);
    if (!(fps > 0.0)) fps = bundle.fps_original() > 0.0 ? bundle.fps_original() : 30.0;
    clip.fps = fps;
    ClipWriter writer(tmp, fps);

    // Frames are read sequentially: seeking is unreliable across codecs.
    std::vector<std::pair<std::int64_t, std::int64_t>> spans;
    for (auto i : indices) {
      const Fragment& fr = bundle.fragments()[i];
      spans.emplace_back(bundle.picks()[fr.start], bundle.picks()[fr.end - 1]);
    }
    std::int64_t pos = 0;
    std::size_t span = 0;
    cv::Mat frame;
    while (span < spans.size() && cap.read(frame)) {
      if (pos >= spans[span].first) {
        writer.add(frame);
        clip.frame_digests.push_back(frame_digest(frame));
      }
      ++pos;
      while (span < spans.size() && pos > spans[span].second) ++span;
    }
    writer.finish();
    if (span < spans.size()) {
      fs::remove(tmp);
      throw Error(ErrorKind::clip_unavailable,
                  bundle.video_id() + ": source video ends at frame " + std::to_string(pos));
    }
  } else {
    clip.fps = kSlideshowFps;
    ClipWriter writer(tmp, kSlideshowFps);
    for (auto i : indices) {
      const Fragment& fr = bundle.fragments()[i];
      for (std::size_t r = fr.start; r < fr.end; ++r) {
        auto p = keyframe_path(*bundle.keyframe_dir(), r);
        cv::Mat frame = p ? cv::imread(p->string(), cv::IMREAD_COLOR) : cv::Mat();
        if (frame.empty()) {
          fs::remove(tmp);
          throw Error(ErrorKind::clip_unavailable, bundle.video_id() + ": keyframe " + std::to_string(r) + " unreadable");
        }
        writer.add(frame);
        clip.frame_digests.push_back(frame_digest(frame));
      }
    }
    writer.finish();
  }
  if (clip.frame_digests.empty()) throw Error(ErrorKind::clip_unavailable, bundle.video_id() + ": empty clip");
  fs::rename(tmp, video);

  const nlohmann::json side{{"digest", digest},
                            {"video_id", bundle.video_id()},
                            {"fragment_indices", clip.fragment_indices},
                            {"frame_digests", clip.frame_digests},
                            {"source", std::string(to_string(policy))},
                            {"fps", clip.fps},
                            {"lower_fidelity", clip.lower_fidelity}};
  write_atomic(sidecar, side.dump(1));
  return clip;
}

Clip ClipExtractor::concat_fragments(const FeatureBundle& bundle, std::vector<std::size_t> fragment_indices) {
  if (bundle.source_path() && fs::exists(*bundle.source_path())) {
    return extract(bundle, std::move(fragment_indices), ClipSource::original_video);
  }
  if (bundle.keyframe_dir()) return extract(bundle, std::move(fragment_indices), ClipSource::keyframe_slideshow);
  throw Error(ErrorKind::clip_unavailable, bundle.video_id() + ": neither original video nor keyframes available");
}

}  // namespace textxai
