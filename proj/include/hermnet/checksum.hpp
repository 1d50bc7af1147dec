#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace hermnet {

/// FNV-1a 64-bit; stable content fingerprints for manifests and seed mixing.
inline uint64_t fnv1a64(std::string_view data) {
  uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

uint64_t fnv1a64_file(const std::filesystem::path& path);

std::string checksum_hex(uint64_t value);

}  // namespace hermnet
