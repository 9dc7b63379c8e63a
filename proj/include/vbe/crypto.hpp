#pragma once

// Hashing and the simulation signature scheme. SHA-256 and HMAC-SHA256 come
// from OpenSSL; keys are drawn from a caller-supplied seeded generator.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include "vbe/common.hpp"

namespace vbe {

using Bytes = std::string;  ///< raw octets

inline std::string to_hex(std::string_view raw)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string           out;
  out.reserve(raw.size() * 2);
  for (unsigned char c : raw)
  {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xf]);
  }
  return out;
}

inline Bytes sha256(std::string_view data)
{
  std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
  SHA256(reinterpret_cast<unsigned char const *>(data.data()), data.size(), md.data());
  return Bytes(reinterpret_cast<char const *>(md.data()), md.size());
}

inline std::string sha256_hex(std::string_view data) { return to_hex(sha256(data)); }

inline Bytes hmac_sha256(std::string_view key, std::string_view data)
{
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int                               len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
       reinterpret_cast<unsigned char const *>(data.data()), data.size(), md.data(), &len);
  return Bytes(reinterpret_cast<char const *>(md.data()), len);
}

struct KeyPair
{
  Bytes       sk;
  std::string pk;  ///< public identifier, also used as the account address
};

/// Keyed-hash signatures: sig = HMAC(sk, pk || 0x00 || msg).
///
/// Verification needs the secret, so the scheme keeps a registry of keys it
/// generated; that registry plays the role of the public-key relation. Nothing
/// outside this object can produce a valid tag without the secret.
class SignatureScheme
{
public:
  explicit SignatureScheme(std::uint64_t seed) : rng_(seed) {}

  KeyPair keygen()
  {
    Bytes sk(32, '\0');
    for (auto &c : sk)
      c = static_cast<char>(rng_() & 0xff);
    std::string pk = public_id(sk);
    registry_[pk] = sk;
    return {sk, pk};
  }

  static std::string public_id(Bytes const &sk) { return "0x" + sha256_hex("pk" + sk).substr(0, 40); }

  static std::string sign(KeyPair const &k, std::string_view msg) { return sign(k.sk, k.pk, msg); }

  static std::string sign(Bytes const &sk, std::string const &pk, std::string_view msg)
  {
    return to_hex(hmac_sha256(sk, pk + '\0' + std::string(msg)));
  }

  bool verify(std::string const &pk, std::string_view msg, std::string const &sig) const
  {
    auto it = registry_.find(pk);
    if (it == registry_.end())
      return false;
    return sign(it->second, pk, msg) == sig;
  }

  bool knows(std::string const &pk) const { return registry_.count(pk) != 0; }

  std::mt19937_64 &rng() { return rng_; }

private:
  std::mt19937_64              rng_;
  std::map<std::string, Bytes> registry_;
};

/// XOR with an HMAC-SHA256 keystream. Encrypting twice decrypts.
inline Bytes keystream_xor(std::string_view key, std::string_view nonce, std::string_view data)
{
  Bytes         out(data);
  std::uint32_t counter = 0;
  for (std::size_t off = 0; off < out.size(); off += 32, ++counter)
  {
    auto const block = hmac_sha256(key, std::string(nonce) + '\0' + std::to_string(counter));
    for (std::size_t i = 0; i < 32 && off + i < out.size(); ++i)
      out[off + i] = static_cast<char>(out[off + i] ^ block[i]);
  }
  return out;
}

}  // namespace vbe
