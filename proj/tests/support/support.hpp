#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cdga/dataset/synthetic.hpp"
#include "cdga/generator/backend.hpp"

namespace cdga::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Writes a tiny solid-colour PNG.
void write_png(const std::filesystem::path& path, float r, float g, float b, int size = 8);

// <root>/<domain>/<class>/img<k>.png with counts[d][c] images, 8x8 pixels.
void write_grid_dataset(const std::filesystem::path& root, const std::vector<std::string>& domains,
                        const std::vector<std::string>& classes, const std::vector<std::vector<int>>& counts);

// Wraps a backend, counting calls; `fail` decides per request whether to throw.
class CountingBackend : public LdmBackend {
 public:
  explicit CountingBackend(std::shared_ptr<LdmBackend> inner,
                           std::function<bool(const BackendRequest&)> fail = {})
      : inner_(std::move(inner)), fail_(std::move(fail)) {}

  std::set<Capability> capabilities() const override { return inner_->capabilities(); }
  bool deterministic() const override { return inner_->deterministic(); }
  int max_concurrency() const override { return inner_->max_concurrency(); }
  std::string name() const override { return "counting:" + inner_->name(); }
  BackendResponse generate(const BackendRequest& request) override;

  int calls() const { return calls_.load(); }

 private:
  std::shared_ptr<LdmBackend> inner_;
  std::function<bool(const BackendRequest&)> fail_;
  std::atomic<int> calls_{0};
};

// Byte-wise file equality.
bool same_file(const std::filesystem::path& a, const std::filesystem::path& b);

// Every regular file under `root`, relative, sorted.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& root);

}  // namespace cdga::test
