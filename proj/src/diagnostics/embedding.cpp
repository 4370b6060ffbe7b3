#include "cdga/diagnostics/embedding.hpp"

#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/core/image.hpp"

namespace cdga {

EmbeddingMatrix::EmbeddingMatrix(Eigen::MatrixXd raw, std::vector<std::string> row_ids,
                                 std::string encoder)
    : vectors(std::move(raw)), ids(std::move(row_ids)), encoder_id(std::move(encoder)) {
  if (static_cast<Eigen::Index>(ids.size()) != vectors.rows()) {
    throw InvalidArgument("embedding ids must match the number of rows");
  }
  if (!vectors.allFinite()) throw NumericalError("embedding contains non-finite values");
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
    const double n = vectors.row(r).norm();
    if (n == 0.0) throw NumericalError("embedding row " + ids[static_cast<std::size_t>(r)] + " is zero");
    vectors.row(r) /= n;
  }
}

std::optional<Eigen::VectorXd> StubEncoder::encode(const std::filesystem::path& path) {
  const auto loaded = load_image(path);
  if (!loaded) return std::nullopt;
  const Image img = resize(*loaded, 16, 16);
  Eigen::VectorXd f(dim());
  const int hw = img.height * img.width;
  for (int c = 0; c < 3; ++c) {
    double s = 0.0, s2 = 0.0;
    for (int p = 0; p < hw; ++p) {
      const double v = img.pixels[static_cast<std::size_t>(c) * hw + p];
      s += v;
      s2 += v * v;
    }
    const double mean = s / hw;
    f[c] = mean;
    f[3 + c] = std::sqrt(std::max(0.0, s2 / hw - mean * mean));
    for (int gy = 0; gy < 4; ++gy) {
      for (int gx = 0; gx < 4; ++gx) {
        double cell = 0.0;
        for (int y = gy * 4; y < gy * 4 + 4; ++y) {
          for (int x = gx * 4; x < gx * 4 + 4; ++x) cell += img.at(c, y, x);
        }
        f[6 + c * 16 + gy * 4 + gx] = cell / 16.0;
      }
    }
  }
  f[dim() - 1] = 0.1;
  return f;
}

HttpEncoder::HttpEncoder(std::string url) : url_(std::move(url)) {
  httplib::Client client(url_);
  client.set_connection_timeout(10, 0);
  auto res = client.Get("/info");
  if (!res || res->status != 200) {
    throw BackendError("embedding service at " + url_ + " is unreachable");
  }
  try {
    const auto doc = nlohmann::json::parse(res->body);
    id_ = doc.at("encoder_id").get<std::string>();
    dim_ = doc.at("dim").get<int>();
  } catch (const std::exception& e) {
    throw BackendError(std::string("embedding service sent malformed info: ") + e.what());
  }
}

std::optional<Eigen::VectorXd> HttpEncoder::encode(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_bytes(path);
  } catch (const IoError&) {
    return std::nullopt;
  }
  if (!decode_image(bytes)) return std::nullopt;
  httplib::Client client(url_);
  client.set_read_timeout(120, 0);
  const nlohmann::json req{{"image", base64_encode(bytes)}};
  auto res = client.Post("/embed", req.dump(), "application/json");
  if (!res || res->status != 200) throw BackendError("embedding request to " + url_ + " failed");
  const auto doc = nlohmann::json::parse(res->body);
  const auto values = doc.at("embedding").get<std::vector<double>>();
  if (static_cast<int>(values.size()) != dim_) throw BackendError("embedding has the wrong dimension");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

EmbeddingMatrix embed_images(const std::vector<std::filesystem::path>& paths, ImageEncoder& encoder,
                             std::vector<std::string>* warnings, const std::vector<std::string>& ids) {
  if (!ids.empty() && ids.size() != paths.size()) throw InvalidArgument("embed_images: ids/paths mismatch");
  std::vector<Eigen::VectorXd> rows;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    auto v = encoder.encode(paths[i]);
    const std::string id = ids.empty() ? paths[i].generic_string() : ids[i];
    if (!v) {
      if (warnings) warnings->push_back("skipped undecodable image " + id);
      continue;
    }
    rows.push_back(std::move(*v));
    kept.push_back(id);
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), encoder.dim());
  for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  return EmbeddingMatrix(std::move(m), std::move(kept), encoder.id());
}

}  // namespace cdga
