#include "textxai/digest.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <openssl/evp.h>

#include "textxai/error.hpp"

namespace textxai {

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  if (impl_->ctx == nullptr || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: EVP initialisation failed");
  }
}

Sha256::~Sha256() {
  if (impl_ && impl_->ctx) EVP_MD_CTX_free(impl_->ctx);
}

Sha256& Sha256::update(std::string_view bytes) {
  EVP_DigestUpdate(impl_->ctx, bytes.data(), bytes.size());
  return *this;
}

Sha256& Sha256::update(std::span<const double> values) {
  static_assert(sizeof(double) == 8);
  if constexpr (std::endian::native == std::endian::little) {
    EVP_DigestUpdate(impl_->ctx, values.data(), values.size_bytes());
  } else {
    for (double v : values) update_u64(std::bit_cast<std::uint64_t>(v));
  }
  return *this;
}

Sha256& Sha256::update_u64(std::uint64_t value) {
  std::array<unsigned char, 8> buf{};
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(value >> (8 * i));
  EVP_DigestUpdate(impl_->ctx, buf.data(), buf.size());
  return *this;
}

Sha256& Sha256::field(std::string_view bytes) {
  update_u64(bytes.size());
  return update(bytes);
}

std::string Sha256::hex() {
  std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(impl_->ctx, out.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    s.push_back(kHex[out[i] >> 4]);
    s.push_back(kHex[out[i] & 0xF]);
  }
  return s;
}

std::string sha256_hex(std::string_view bytes) { return Sha256().update(bytes).hex(); }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::invalid_input, "cannot open " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.hex();
}

std::uint64_t digest_prefix_u64(std::string_view hex_digest) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 16 && i < hex_digest.size(); ++i) {
    const char c = hex_digest[i];
    const std::uint64_t nib = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : 0;
    v = (v << 4) | nib;
  }
  return v;
}

}  // namespace textxai
