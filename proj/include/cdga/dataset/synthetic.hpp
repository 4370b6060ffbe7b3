#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cdga {

// Small shape/colour benchmark: the class is a shape drawn with jittered
// position and size, the domain fixes the colour scheme and texture.
// Shapes by class index: circle, square, triangle, cross, ring, bar,
// diamond (cycled). Styles by domain index are cycled likewise.
struct ShapesDatasetSpec {
  std::vector<std::string> domains{"alpha", "beta", "gamma"};
  std::vector<std::string> classes{"circle", "square", "triangle"};
  std::vector<std::vector<int>> counts;  // [domain][class]; empty means per_cell everywhere
  int per_cell = 12;
  int image_size = 32;
  std::uint64_t seed = 0;
};

// Writes <root>/<domain>/<class>/<nnnn>.png; returns the number of images.
int write_shapes_dataset(const std::filesystem::path& root, const ShapesDatasetSpec& spec);

}  // namespace cdga
