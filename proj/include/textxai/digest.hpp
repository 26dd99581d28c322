#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace textxai {

/// Incremental SHA-256. Numbers are fed as fixed-width little-endian bytes so
/// digests are stable across hosts.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view bytes);
  Sha256& update(std::span<const double> values);
  Sha256& update_u64(std::uint64_t value);
  /// Length-prefixed, so ("ab","c") and ("a","bc") hash differently.
  Sha256& field(std::string_view bytes);

  std::string hex();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// 64-bit prefix of a digest, for deriving mock ids and seeds.
std::uint64_t digest_prefix_u64(std::string_view hex_digest);

}  // namespace textxai
