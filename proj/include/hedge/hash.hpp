// SPDX-License-Identifier: Apache-2.0
#pragma once

// SHA-256 content keys for the judge caches. Requires libcrypto.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "hedge/errors.hpp"

namespace hedge {

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

// Length-prefixed join so ("ab","c") and ("a","bc") hash differently.
inline std::string pair_key(std::string_view premise, std::string_view hypothesis) {
  std::string buf;
  buf.reserve(premise.size() + hypothesis.size() + 24);
  buf += std::to_string(premise.size());
  buf += ':';
  buf += premise;
  buf += std::to_string(hypothesis.size());
  buf += ':';
  buf += hypothesis;
  return sha256_hex(buf);
}

}  // namespace hedge
