#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace cdga {

// 64-bit FNV-1a. Stable across platforms; used for task identifiers.
std::uint64_t fnv1a64(std::string_view data);

std::string to_hex(std::uint64_t value);

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace cdga
