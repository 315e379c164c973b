#pragma once

// Stable content digests for fingerprints and manifests. FNV-1a 64 is
// enough here: digests identify content for replay lookup and
// reproducibility checks, they are not a security boundary.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace squadgen {

inline uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

inline std::string digest(std::string_view data) {
  return hex64(fnv1a64(data));
}

// nlohmann::json keeps object keys sorted, so dump() is a canonical form:
// the fingerprint survives field reordering in the request body.
inline std::string json_digest(const nlohmann::json& j) {
  return digest(j.dump());
}

inline std::string request_fingerprint(std::string_view role,
                                       const nlohmann::json& body) {
  nlohmann::json wrapper{{"role", std::string(role)}, {"request", body}};
  return json_digest(wrapper);
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for digest: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return digest(buf.str());
}

}  // namespace squadgen
