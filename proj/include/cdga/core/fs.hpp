#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cdga {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a half-written file.
void atomic_write(const fs::path& path, std::string_view contents);
void atomic_write(const fs::path& path, std::span<const std::uint8_t> contents);

std::string read_text(const fs::path& path);
std::vector<std::uint8_t> read_bytes(const fs::path& path);

// Pretty-printed JSON with a trailing newline; output is deterministic.
void write_json(const fs::path& path, const json& doc);
json read_json(const fs::path& path);

// Appends one line, creating the file if needed.
void append_line(const fs::path& path, std::string_view line);

}  // namespace cdga
