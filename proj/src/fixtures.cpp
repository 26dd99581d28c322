#include "textxai/fixtures.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include <H5Cpp.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "hdf5_lock.hpp"
#include "textxai/error.hpp"

namespace fs = std::filesystem;

namespace textxai {

namespace {

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool omitted(const FixtureOptions& o, const std::string& name) {
  return std::find(o.omit_datasets.begin(), o.omit_datasets.end(), name) != o.omit_datasets.end();
}

// Frame `orig` of a video whose fragment colour is `fragment`: a flat colour
// per fragment with a square whose position moves with the frame index.
cv::Mat render_frame(std::size_t fragment, std::size_t orig, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 1000003ULL + fragment);
  const cv::Scalar bg(static_cast<double>(rng() % 200 + 30), static_cast<double>(rng() % 200 + 30),
                      static_cast<double>(rng() % 200 + 30));
  cv::Mat img(size, size, CV_8UC3, bg);
  const int box = std::max(4, size / 4);
  const int span = size - box;
  const int x = static_cast<int>((orig * 7) % static_cast<std::size_t>(span));
  const int y = static_cast<int>((orig * 3) % static_cast<std::size_t>(span));
  cv::rectangle(img, cv::Rect(x, y, box, box), cv::Scalar(255 - bg[0], 255 - bg[1], 255 - bg[2]), cv::FILLED);
  return img;
}

void write_scalar_attr(H5::H5Object& obj, const std::string& name, double v) {
  H5::Attribute a = obj.createAttribute(name, H5::PredType::NATIVE_DOUBLE, H5::DataSpace(H5S_SCALAR));
  a.write(H5::PredType::NATIVE_DOUBLE, &v);
}

void write_string_attr(H5::H5Object& obj, const std::string& name, const std::string& v) {
  H5::StrType type(H5::PredType::C_S1, v.size());
  H5::Attribute a = obj.createAttribute(name, type, H5::DataSpace(H5S_SCALAR));
  a.write(type, v);
}

}  // namespace

std::vector<FixtureVideo> random_fixture_videos(std::size_t count, std::uint64_t seed, std::size_t min_fragments,
                                                std::size_t max_fragments) {
  if (min_fragments < 1 || max_fragments < min_fragments) {
    throw Error(ErrorKind::invalid_input, "bad fragment count range");
  }
  std::mt19937_64 rng(seed ^ 0x66697874ULL);
  std::vector<FixtureVideo> videos;
  for (std::size_t v = 0; v < count; ++v) {
    FixtureVideo fv;
    fv.key = "video_" + std::to_string(v + 1);
    const std::size_t f = min_fragments + rng() % (max_fragments - min_fragments + 1);
    for (std::size_t i = 0; i < f; ++i) fv.fragment_lengths.push_back(2 + rng() % 7);
    videos.push_back(std::move(fv));
  }
  return videos;
}

FixturePaths write_fixture(const fs::path& dir, const std::vector<FixtureVideo>& videos,
                           const FixtureOptions& options) {
  if (options.stride < 1 || options.feature_dim < 1) throw Error(ErrorKind::invalid_input, "bad fixture options");
  fs::create_directories(dir);
  FixturePaths paths{dir / "features.h5", dir / "keyframes", dir / "videos"};
  const double fps = 2.0 * static_cast<double>(options.stride);

  std::lock_guard lock(detail::hdf5_mutex());
  H5::Exception::dontPrint();
  H5::H5File file(paths.container.string(), H5F_ACC_TRUNC);
  std::mt19937_64 rng(options.seed);

  for (std::size_t v = 0; v < videos.size(); ++v) {
    const auto& fv = videos[v];
    if (fv.fragment_lengths.empty()) throw Error(ErrorKind::invalid_input, fv.key + ": no fragments");
    std::size_t n = 0;
    for (auto len : fv.fragment_lengths) {
      if (len == 0) throw Error(ErrorKind::invalid_input, fv.key + ": empty fragment");
      n += len;
    }
    const std::size_t d = options.feature_dim;
    const std::uint64_t video_seed = options.seed * 7919ULL + v;

    std::vector<double> features(n * d);
    std::vector<std::int64_t> picks(n);
    std::vector<std::int64_t> cps;
    std::vector<std::size_t> fragment_of(n);
    std::size_t row = 0;
    for (std::size_t f = 0; f < fv.fragment_lengths.size(); ++f) {
      std::vector<double> scene(d);
      for (double& x : scene) x = 0.5 + uniform(rng);
      const std::size_t start = row;
      for (std::size_t i = 0; i < fv.fragment_lengths[f]; ++i, ++row) {
        for (std::size_t c = 0; c < d; ++c) features[row * d + c] = scene[c] + 0.05 * (uniform(rng) - 0.5);
        picks[row] = static_cast<std::int64_t>(row * options.stride);
        fragment_of[row] = f;
      }
      switch (options.style) {
        case ChangePointStyle::half_open_sampled:
          cps.insert(cps.end(), {static_cast<std::int64_t>(start), static_cast<std::int64_t>(row)});
          break;
        case ChangePointStyle::inclusive_sampled:
          cps.insert(cps.end(), {static_cast<std::int64_t>(start), static_cast<std::int64_t>(row - 1)});
          break;
        case ChangePointStyle::inclusive_original:
          cps.insert(cps.end(), {static_cast<std::int64_t>(start * options.stride),
                                 static_cast<std::int64_t>(row * options.stride - 1)});
          break;
      }
    }
    const auto n_frames = static_cast<std::int64_t>(n * options.stride);

    H5::Group g = file.createGroup(fv.key);
    write_scalar_attr(g, "fps", fps);
    if (!omitted(options, "features")) {
      const hsize_t dims[2] = {n, d};
      H5::DataSet ds = g.createDataSet("features", H5::PredType::NATIVE_FLOAT, H5::DataSpace(2, dims));
      ds.write(features.data(), H5::PredType::NATIVE_DOUBLE);
    }
    if (!omitted(options, "change_points")) {
      const hsize_t dims[2] = {fv.fragment_lengths.size(), 2};
      H5::DataSet ds = g.createDataSet("change_points", H5::PredType::NATIVE_INT32, H5::DataSpace(2, dims));
      ds.write(cps.data(), H5::PredType::NATIVE_INT64);
      if (options.annotate) {
        write_string_attr(ds, "units", options.style == ChangePointStyle::inclusive_original ? "original" : "sampled");
        write_scalar_attr(ds, "half_open", options.style == ChangePointStyle::half_open_sampled ? 1.0 : 0.0);
      }
    }
    if (!omitted(options, "picks")) {
      const hsize_t dims[1] = {n};
      H5::DataSet ds = g.createDataSet("picks", H5::PredType::NATIVE_INT32, H5::DataSpace(1, dims));
      ds.write(picks.data(), H5::PredType::NATIVE_INT64);
    }
    if (!omitted(options, "n_frames")) {
      H5::DataSet ds = g.createDataSet("n_frames", H5::PredType::NATIVE_INT32, H5::DataSpace(H5S_SCALAR));
      ds.write(&n_frames, H5::PredType::NATIVE_INT64);
    }

    if (options.keyframes) {
      const fs::path kdir = paths.keyframe_root / fv.key;
      fs::create_directories(kdir);
      for (std::size_t r = 0; r < n; ++r) {
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.png", r);
        cv::imwrite((kdir / name).string(),
                    render_frame(fragment_of[r], static_cast<std::size_t>(picks[r]), options.image_size, video_seed));
      }
    }
    if (options.source_videos) {
      fs::create_directories(paths.video_dir);
      const fs::path out = paths.video_dir / (fv.key + ".avi");
      cv::VideoWriter writer(out.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), fps,
                             cv::Size(options.image_size, options.image_size), true);
      if (!writer.isOpened()) throw Error(ErrorKind::clip_unavailable, "cannot write " + out.string());
      for (std::int64_t o = 0; o < n_frames; ++o) {
        const std::size_t r = std::min(static_cast<std::size_t>(o) / options.stride, n - 1);
        writer.write(render_frame(fragment_of[r], static_cast<std::size_t>(o), options.image_size, video_seed));
      }
    }
  }
  return paths;
}

}  // namespace textxai
