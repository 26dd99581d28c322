#include "textxai/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <mutex>

#include <H5Cpp.h>

#include "hdf5_lock.hpp"
#include "textxai/digest.hpp"

namespace fs = std::filesystem;

namespace textxai {

namespace {

using detail::hdf5_mutex;

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::malformed_container, what); }

bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      const auto na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      const auto ta = na.substr(std::min(na.find_first_not_of('0'), na.size()));
      const auto tb = nb.substr(std::min(nb.find_first_not_of('0'), nb.size()));
      if (ta.size() != tb.size()) return ta.size() < tb.size();
      if (ta != tb) return ta < tb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

H5::H5File open_container(const fs::path& container) {
  if (!fs::exists(container)) throw Error(ErrorKind::invalid_input, "container not found: " + container.string());
  try {
    H5::Exception::dontPrint();
    return H5::H5File(container.string(), H5F_ACC_RDONLY);
  } catch (const H5::Exception& e) {
    malformed("cannot open container " + container.string() + ": " + e.getDetailMsg());
  }
}

std::vector<hsize_t> dims_of(const H5::DataSet& ds) {
  const H5::DataSpace space = ds.getSpace();
  std::vector<hsize_t> dims(static_cast<std::size_t>(space.getSimpleExtentNdims()));
  space.getSimpleExtentDims(dims.data());
  return dims;
}

H5::DataSet open_dataset(const H5::Group& g, const std::string& video_key, const std::string& name) {
  if (!g.nameExists(name)) malformed(video_key + ": missing dataset '" + name + "'");
  return g.openDataSet(name);
}

std::optional<std::string> string_attr(const H5::H5Object& obj, const std::string& name) {
  if (!obj.attrExists(name)) return std::nullopt;
  H5::Attribute attr = obj.openAttribute(name);
  std::string value;
  attr.read(attr.getStrType(), value);
  return value;
}

std::optional<double> numeric_attr(const H5::H5Object& obj, const std::string& name) {
  if (!obj.attrExists(name)) return std::nullopt;
  H5::Attribute attr = obj.openAttribute(name);
  if (attr.getTypeClass() != H5T_INTEGER && attr.getTypeClass() != H5T_FLOAT) return std::nullopt;
  double v = 0.0;
  attr.read(H5::PredType::NATIVE_DOUBLE, &v);
  return v;
}

struct RawChangePoints {
  std::vector<std::int64_t> start;
  std::vector<std::int64_t> end;
};

std::vector<Fragment> normalize_change_points(const RawChangePoints& cp, const std::vector<std::int64_t>& picks,
                                              std::size_t n, std::int64_t n_frames,
                                              std::optional<std::string> units_attr,
                                              std::optional<double> half_open_attr, const std::string& video_key,
                                              std::map<std::string, std::string>& meta) {
  const std::size_t f = cp.start.size();
  if (f == 0) malformed(video_key + ": change_points is empty");
  const std::int64_t max_end = *std::max_element(cp.end.begin(), cp.end.end());

  bool original_units;
  if (units_attr) {
    if (*units_attr != "sampled" && *units_attr != "original") malformed(video_key + ": unknown change_points units");
    original_units = *units_attr == "original";
  } else {
    original_units = max_end > static_cast<std::int64_t>(n);
  }

  bool inclusive;
  if (half_open_attr) {
    inclusive = *half_open_attr == 0.0;
  } else if (f >= 2) {
    bool all_adjacent = true, all_touching = true;
    for (std::size_t i = 1; i < f; ++i) {
      all_adjacent &= cp.start[i] == cp.end[i - 1] + 1;
      all_touching &= cp.start[i] == cp.end[i - 1];
    }
    if (!all_adjacent && !all_touching) malformed(video_key + ": change_points are neither inclusive nor half-open");
    inclusive = all_adjacent;
  } else {
    const std::int64_t last = original_units ? n_frames : static_cast<std::int64_t>(n);
    inclusive = cp.end[0] == last - 1;
  }

  meta["change_points_units"] = original_units ? "original" : "sampled";
  meta["change_points_convention"] = inclusive ? "inclusive (normalized to half-open)" : "half-open";

  std::vector<std::pair<std::int64_t, std::int64_t>> ranges(f);
  for (std::size_t i = 0; i < f; ++i) {
    ranges[i] = {cp.start[i], cp.end[i] + (inclusive ? 1 : 0)};
    if (ranges[i].first < 0 || ranges[i].second <= ranges[i].first) {
      malformed(video_key + ": invalid change point " + std::to_string(i));
    }
  }

  std::vector<Fragment> fragments;
  if (!original_units) {
    for (const auto& [s, e] : ranges) fragments.push_back({static_cast<std::size_t>(s), static_cast<std::size_t>(e)});
    return fragments;
  }

  // Assign every sampled frame to the segment holding its original index;
  // segments that no sampled frame falls into are dropped.
  std::size_t seg = 0;
  std::size_t dropped = 0;
  std::optional<std::size_t> current_seg;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t p = picks[i];
    while (seg < f && p >= ranges[seg].second) ++seg;
    if (seg == f || p < ranges[seg].first) {
      malformed(video_key + ": pick " + std::to_string(p) + " falls outside every change point");
    }
    if (current_seg != seg) {
      if (current_seg) fragments.back().end = i;
      dropped += current_seg ? seg - *current_seg - 1 : seg;
      fragments.push_back({i, i + 1});
      current_seg = seg;
    }
  }
  fragments.back().end = n;
  dropped += f - 1 - *current_seg;
  meta["dropped_empty_segments"] = std::to_string(dropped);
  return fragments;
}

std::optional<fs::path> find_source_video(const fs::path& dir, const std::string& key) {
  for (const char* ext : {".mp4", ".avi", ".webm", ".mkv", ".mov"}) {
    fs::path p = dir / (key + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::string> list_videos(const fs::path& container) {
  std::lock_guard lock(hdf5_mutex());
  H5::H5File file = open_container(container);
  std::vector<std::string> keys;
  for (hsize_t i = 0; i < file.getNumObjs(); ++i) {
    const std::string name = file.getObjnameByIdx(i);
    if (file.childObjType(name) == H5O_TYPE_GROUP) keys.push_back(name);
  }
  std::sort(keys.begin(), keys.end(), natural_less);
  return keys;
}

std::string container_digest(const fs::path& container) {
  static std::mutex mu;
  static std::map<std::string, std::string> memo;
  const auto key = fs::absolute(container).string() + "|" + std::to_string(fs::file_size(container)) + "|" +
                   std::to_string(fs::last_write_time(container).time_since_epoch().count());
  {
    std::lock_guard lock(mu);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
  }
  auto digest = sha256_file(container);
  std::lock_guard lock(mu);
  memo[key] = digest;
  return digest;
}

FeatureBundle load_bundle(const fs::path& container, const std::string& video_key, const LoadOptions& options) {
  BundleFields fields;
  fields.video_id = video_key;
  {
    std::lock_guard lock(hdf5_mutex());
    H5::H5File file = open_container(container);
    if (!file.nameExists(video_key) || file.childObjType(video_key) != H5O_TYPE_GROUP) {
      throw Error(ErrorKind::missing_key, "video '" + video_key + "' not found in " + container.string());
    }
    try {
      H5::Group g = file.openGroup(video_key);

      H5::DataSet feat = open_dataset(g, video_key, "features");
      const auto fdims = dims_of(feat);
      if (fdims.size() != 2) malformed(video_key + ": features must be two-dimensional");
      std::vector<double> data(static_cast<std::size_t>(fdims[0] * fdims[1]));
      feat.read(data.data(), H5::PredType::NATIVE_DOUBLE);
      fields.features = Matrix(fdims[0], fdims[1], std::move(data));

      H5::DataSet picks_ds = open_dataset(g, video_key, "picks");
      const auto pdims = dims_of(picks_ds);
      if (pdims.size() != 1) malformed(video_key + ": picks must be one-dimensional");
      fields.picks.resize(static_cast<std::size_t>(pdims[0]));
      picks_ds.read(fields.picks.data(), H5::PredType::NATIVE_INT64);

      H5::DataSet nf = open_dataset(g, video_key, "n_frames");
      if (dims_of(nf).size() > 1) malformed(video_key + ": n_frames must be a scalar");
      nf.read(&fields.n_frames_original, H5::PredType::NATIVE_INT64);

      H5::DataSet cp_ds = open_dataset(g, video_key, "change_points");
      const auto cdims = dims_of(cp_ds);
      if (cdims.size() != 2 || cdims[1] != 2) malformed(video_key + ": change_points must have shape F x 2");
      std::vector<std::int64_t> cp_flat(static_cast<std::size_t>(cdims[0] * 2));
      cp_ds.read(cp_flat.data(), H5::PredType::NATIVE_INT64);
      RawChangePoints cp;
      for (std::size_t i = 0; i < cdims[0]; ++i) {
        cp.start.push_back(cp_flat[2 * i]);
        cp.end.push_back(cp_flat[2 * i + 1]);
      }

      if (fields.picks.size() != fields.features.rows()) {
        malformed(video_key + ": picks length " + std::to_string(fields.picks.size()) + " != feature rows " +
                  std::to_string(fields.features.rows()));
      }
      fields.fragments = normalize_change_points(cp, fields.picks, fields.features.rows(), fields.n_frames_original,
                                                 string_attr(cp_ds, "units"), numeric_attr(cp_ds, "half_open"),
                                                 video_key, fields.metadata);
      if (auto fps = numeric_attr(g, "fps")) fields.fps_original = *fps;
      if (auto name = string_attr(g, "video_name")) fields.metadata["video_name"] = *name;
    } catch (const H5::Exception& e) {
      malformed(video_key + ": " + e.getDetailMsg());
    }
  }
  fields.metadata["container_digest"] = container_digest(container);
  if (options.video_dir) fields.source_path = find_source_video(*options.video_dir, video_key);
  if (options.keyframe_root && fs::is_directory(*options.keyframe_root / video_key)) {
    fields.keyframe_dir = *options.keyframe_root / video_key;
  }
  return validate_bundle(std::move(fields));
}

}  // namespace textxai
