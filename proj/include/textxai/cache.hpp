#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace textxai {

/// Key for a backend response: digest of (backend id, op, payload digest,
/// optional prompt digest).
std::string cache_key(std::string_view backend_id, std::string_view op, std::string_view payload_digest,
                      std::string_view prompt_digest = {});

/// Content-addressed, write-once response store.
///
/// Layout under the root directory:
///   entries/<key>.bin   raw response bytes
///   index.jsonl         one {"key","bytes","created_at"} line per entry
///
/// Entries are written to a temporary file and renamed into place, so
/// readers never observe a partial entry. A second put with identical bytes
/// is a no-op; with different bytes it raises integrity_error.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, std::string_view bytes);

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path entry_path(const std::string& key) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
};

}  // namespace textxai
