#ifndef VSGEO_MANIFEST_HPP
#define VSGEO_MANIFEST_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vsgeo/errors.hpp"

namespace vsgeo {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a over the canonical (key-sorted) config text; stable across platforms.
inline std::string content_digest(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct RunManifest {
  std::string subcommand;
  std::string config_digest;
  std::uint64_t master_seed = 0;
  std::vector<std::string> artifact_paths;
  std::string tool_version = kToolVersion;
};

}  // namespace vsgeo

#endif
