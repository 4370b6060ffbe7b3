#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cdga {

// N x d matrix of image embeddings with unit-norm rows.
struct EmbeddingMatrix {
  Eigen::MatrixXd vectors;
  std::vector<std::string> ids;
  std::string encoder_id;

  EmbeddingMatrix() = default;
  // Normalises rows; throws on non-finite values, zero rows or size mismatch.
  EmbeddingMatrix(Eigen::MatrixXd raw, std::vector<std::string> ids, std::string encoder_id);

  Eigen::Index size() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }
};

class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  // nullopt when the file cannot be decoded.
  virtual std::optional<Eigen::VectorXd> encode(const std::filesystem::path& image) = 0;
};

// Deterministic pixel-statistics encoder: per-channel mean and standard
// deviation, per-channel means over a 4x4 grid, and a constant bias term.
class StubEncoder : public ImageEncoder {
 public:
  std::string id() const override { return "stub-pixel-stats"; }
  int dim() const override { return 3 + 3 + 3 * 16 + 1; }
  std::optional<Eigen::VectorXd> encode(const std::filesystem::path& image) override;
};

// Client for a remote embedding service (e.g. a CLIP image tower):
//   GET  /info  -> {encoder_id, dim}
//   POST /embed -> {image: base64} in, {embedding: [..]} out
class HttpEncoder : public ImageEncoder {
 public:
  explicit HttpEncoder(std::string url);
  std::string id() const override { return id_; }
  int dim() const override { return dim_; }
  std::optional<Eigen::VectorXd> encode(const std::filesystem::path& image) override;

 private:
  std::string url_;
  std::string id_;
  int dim_ = 0;
};

// Embeds images in order; undecodable files are skipped and reported in
// `warnings`, their ids omitted. `ids` defaults to the path strings.
EmbeddingMatrix embed_images(const std::vector<std::filesystem::path>& paths, ImageEncoder& encoder,
                             std::vector<std::string>* warnings = nullptr,
                             const std::vector<std::string>& ids = {});

}  // namespace cdga
