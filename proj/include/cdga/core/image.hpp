#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cdga {

// RGB image with float channels in [0, 1], stored channel-major (CHW) so a
// flattened image is directly usable as a model input column.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // size 3 * height * width

  static constexpr int kChannels = 3;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), pixels(static_cast<std::size_t>(kChannels * h * w), fill) {}

  float& at(int c, int y, int x) { return pixels[index(c, y, x)]; }
  float at(int c, int y, int x) const { return pixels[index(c, y, x)]; }
  bool empty() const { return pixels.empty(); }

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
};

// Decoding returns nullopt for undecodable content instead of throwing.
std::optional<Image> decode_image(std::span<const std::uint8_t> bytes);
std::optional<Image> load_image(const std::filesystem::path& path);

// PNG encoding is lossless and deterministic for a given image.
std::vector<std::uint8_t> encode_png(const Image& image);
void save_png(const Image& image, const std::filesystem::path& path);

Image resize(const Image& image, int height, int width);

bool has_image_extension(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace cdga
