#include "cdga/core/image.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"

namespace cdga {

namespace {

Image from_mat(const cv::Mat& bgr) {
  Image img(bgr.rows, bgr.cols);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      // OpenCV stores BGR.
      img.at(0, y, x) = static_cast<float>(row[x][2]) / 255.0f;
      img.at(1, y, x) = static_cast<float>(row[x][1]) / 255.0f;
      img.at(2, y, x) = static_cast<float>(row[x][0]) / 255.0f;
    }
  }
  return img;
}

cv::Mat to_mat(const Image& img) {
  cv::Mat bgr(img.height, img.width, CV_8UC3);
  auto quantize = [](float v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  };
  for (int y = 0; y < img.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x) {
      row[x][2] = quantize(img.at(0, y, x));
      row[x][1] = quantize(img.at(1, y, x));
      row[x][0] = quantize(img.at(2, y, x));
    }
  }
  return bgr;
}

}  // namespace

std::optional<Image> decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return std::nullopt;
  const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1,
                    const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat decoded;
  try {
    decoded = cv::imdecode(buf, cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    return std::nullopt;
  }
  if (decoded.empty()) return std::nullopt;
  return from_mat(decoded);
}

std::optional<Image> load_image(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_bytes(path);
  } catch (const IoError&) {
    return std::nullopt;
  }
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.empty()) throw InvalidArgument("encode_png: empty image");
  std::vector<std::uint8_t> out;
  // Fixed compression level and no timestamp chunks keep output reproducible.
  const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imencode(".png", to_mat(image), out, params)) throw IoError("PNG encoding failed");
  return out;
}

void save_png(const Image& image, const std::filesystem::path& path) {
  atomic_write(path, encode_png(image));
}

Image resize(const Image& image, int height, int width) {
  if (image.height == height && image.width == width) return image;
  Image out(height, width);
  // Area-style averaging when shrinking, bilinear when enlarging.
  for (int c = 0; c < Image::kChannels; ++c) {
    cv::Mat src(image.height, image.width, CV_32FC1,
                const_cast<float*>(image.pixels.data()) +
                    static_cast<std::size_t>(c) * image.height * image.width);
    cv::Mat dst(height, width, CV_32FC1,
                out.pixels.data() + static_cast<std::size_t>(c) * height * width);
    const int interp = (height < image.height || width < image.width) ? cv::INTER_AREA
                                                                        : cv::INTER_LINEAR;
    cv::resize(src, dst, dst.size(), 0, 0, interp);
  }
  return out;
}

bool has_image_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back(kB64[v & 63]);
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kB64[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lookup{};
  lookup.fill(-1);
  for (int k = 0; k < 64; ++k) lookup[static_cast<unsigned char>(kB64[k])] = k;
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    const int v = lookup[static_cast<unsigned char>(ch)];
    if (v < 0) throw InvalidArgument("base64_decode: invalid character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace cdga
