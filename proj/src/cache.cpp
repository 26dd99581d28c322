#include "textxai/cache.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "textxai/digest.hpp"
#include "textxai/error.hpp"

namespace fs = std::filesystem;

namespace textxai {

std::string cache_key(std::string_view backend_id, std::string_view op, std::string_view payload_digest,
                      std::string_view prompt_digest) {
  return Sha256().field("cache/v1").field(backend_id).field(op).field(payload_digest).field(prompt_digest).hex();
}

namespace {

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.size() > 128) return false;
  for (char c : key) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

ResponseCache::ResponseCache(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "entries");
}

fs::path ResponseCache::entry_path(const std::string& key) const {
  if (!valid_key(key)) throw Error(ErrorKind::invalid_input, "cache key must be lowercase hex: " + key);
  return root_ / "entries" / (key + ".bin");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  return read_file(entry_path(key));
}

void ResponseCache::put(const std::string& key, std::string_view bytes) {
  const fs::path target = entry_path(key);
  std::lock_guard lock(mu_);
  if (auto existing = read_file(target)) {
    if (*existing != bytes) throw Error(ErrorKind::integrity_error, "cache entry " + key + " already holds different bytes");
    return;
  }
  static std::atomic<unsigned long> counter{0};
  std::ostringstream tmp_name;
  tmp_name << key << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter++;
  const fs::path tmp = root_ / "entries" / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::integrity_error, "failed writing cache entry " + key);
  }
  fs::rename(tmp, target);

  const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  std::ofstream index(root_ / "index.jsonl", std::ios::app);
  index << nlohmann::json{{"key", key}, {"bytes", bytes.size()}, {"created_at", now}}.dump() << '\n';
}

}  // namespace textxai
