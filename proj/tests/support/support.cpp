#include "support.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>

#include "cdga/core/error.hpp"
#include "cdga/core/image.hpp"

namespace cdga::test {

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "cdga-test-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw IoError("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_png(const std::filesystem::path& path, float r, float g, float b, int size) {
  Image img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  }
  std::filesystem::create_directories(path.parent_path());
  save_png(img, path);
}

void write_grid_dataset(const std::filesystem::path& root, const std::vector<std::string>& domains,
                        const std::vector<std::string>& classes, const std::vector<std::vector<int>>& counts) {
  for (std::size_t d = 0; d < domains.size(); ++d) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      std::filesystem::create_directories(root / domains[d] / classes[c]);
      for (int k = 0; k < counts[d][c]; ++k) {
        const float v = static_cast<float>((k * 37 + static_cast<int>(d) * 11 + static_cast<int>(c) * 5) % 97) / 96.0f;
        write_png(root / domains[d] / classes[c] / ("img" + std::to_string(k) + ".png"), v,
                  static_cast<float>(d) / static_cast<float>(domains.size()),
                  static_cast<float>(c) / static_cast<float>(classes.size()));
      }
    }
  }
}

BackendResponse CountingBackend::generate(const BackendRequest& request) {
  ++calls_;
  if (fail_ && fail_(request)) throw BackendError("injected failure");
  return inner_->generate(request);
}

bool same_file(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  return std::equal(std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>(),
                    std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>());
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(std::filesystem::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cdga::test
