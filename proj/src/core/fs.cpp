#include "cdga/core/fs.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "cdga/core/error.hpp"
#include "cdga/core/hash.hpp"

namespace cdga {

namespace {

fs::path temp_sibling(const fs::path& path) {
  static std::atomic<std::uint64_t> counter{0};
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  return path.parent_path() /
         (path.filename().string() + ".tmp." + to_hex(tid ^ (counter++ << 20)));
}

}  // namespace

void atomic_write(const fs::path& path, std::string_view contents) {
  atomic_write(path, std::span(reinterpret_cast<const std::uint8_t*>(contents.data()),
                               contents.size()));
}

void atomic_write(const fs::path& path, std::span<const std::uint8_t> contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(contents.data()),
              static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("rename to " + path.string() + " failed: " + ec.message());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  const std::string text = read_text(path);
  return {text.begin(), text.end()};
}

void write_json(const fs::path& path, const json& doc) { atomic_write(path, doc.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void append_line(const fs::path& path, std::string_view line) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  out << line << '\n';
  out.flush();
}

}  // namespace cdga
