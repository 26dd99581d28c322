#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unistd.h>
#include <vector>

#include <Eigen/Dense>

#include "textxai/backends.hpp"
#include "textxai/model.hpp"

namespace testing {

/// Kind of the textxai::Error thrown by fn, or nullopt if it returns.
template <typename Fn>
std::optional<textxai::ErrorKind> error_kind(Fn&& fn) {
  try {
    fn();
  } catch (const textxai::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("textxai-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Bundle with the given fragment lengths, features uniform in [0.5, 1.5]
/// (never zero), picks = 15 * row.
inline textxai::FeatureBundle make_bundle(const std::vector<std::size_t>& lengths, std::size_t dim = 4,
                                          std::uint64_t seed = 0, const std::string& id = "v") {
  textxai::BundleFields f;
  f.video_id = id;
  std::size_t n = 0;
  for (auto len : lengths) {
    f.fragments.push_back({n, n + len});
    n += len;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  f.features = textxai::Matrix(n, dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) f.features(r, c) = u(rng);
    f.picks.push_back(static_cast<std::int64_t>(15 * r));
  }
  f.fps_original = 30.0;
  f.n_frames_original = static_cast<std::int64_t>(15 * n);
  return textxai::FeatureBundle(std::move(f));
}

inline std::vector<std::size_t> random_lengths(std::size_t fragments, std::mt19937_64& rng, std::size_t lo = 2,
                                               std::size_t hi = 8) {
  std::vector<std::size_t> lengths(fragments);
  for (auto& l : lengths) l = lo + rng() % (hi - lo + 1);
  return lengths;
}

/// Kendall tau-b by direct enumeration of all pairs.
inline double kendall_tau_b_oracle(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  long long concordant = 0, discordant = 0, tied_x = 0, tied_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) {
        ++tied_x;
        ++tied_y;
      } else if (dx == 0.0) {
        ++tied_x;
      } else if (dy == 0.0) {
        ++tied_y;
      } else if ((dx > 0) == (dy > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double denom = std::sqrt((n0 - static_cast<double>(tied_x)) * (n0 - static_cast<double>(tied_y)));
  return static_cast<double>(concordant - discordant) / denom;
}

/// Weighted least squares with an unpenalised intercept, solved by
/// Householder QR on sqrt(W) [1 Z] (no normal equations). Returns the
/// coefficients without the intercept.
inline std::vector<double> wls_oracle(const std::vector<std::vector<double>>& z, const std::vector<double>& t,
                                      const std::vector<double>& w) {
  const auto m = static_cast<Eigen::Index>(z.size());
  const auto f = static_cast<Eigen::Index>(z.front().size());
  Eigen::MatrixXd a(m, f + 1);
  Eigen::VectorXd b(m);
  for (Eigen::Index s = 0; s < m; ++s) {
    const double sw = std::sqrt(w[static_cast<std::size_t>(s)]);
    a(s, 0) = sw;
    for (Eigen::Index c = 0; c < f; ++c) a(s, c + 1) = sw * z[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)];
    b(s) = sw * t[static_cast<std::size_t>(s)];
  }
  const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(b);
  return std::vector<double>(beta.data() + 1, beta.data() + beta.size());
}

/// Summarizer whose output is a fixed pseudo-random function of which
/// fragments are present, so fidelity targets vary across masks.
class MaskHashSummarizer final : public textxai::SummarizerBackend {
 public:
  explicit MaskHashSummarizer(std::vector<textxai::Fragment> fragments) : fragments_(std::move(fragments)) {}
  std::string id() const override { return "mask-hash"; }
  std::vector<double> score(const textxai::Matrix& features) const override {
    std::uint64_t code = 1;
    for (const auto& fr : fragments_) code = code * 2 + (features(fr.start, 0) != 0.0 ? 1 : 0);
    std::mt19937_64 rng(code);
    std::vector<double> out(features.rows());
    for (auto& v : out) v = static_cast<double>(rng() % 1000) / 1000.0;
    return out;
  }

 private:
  std::vector<textxai::Fragment> fragments_;
};

}  // namespace testing
