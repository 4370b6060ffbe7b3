#include "cdga/dataset/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "cdga/core/error.hpp"
#include "cdga/core/image.hpp"
#include "cdga/core/rng.hpp"

namespace cdga {

namespace {

struct Style {
  std::array<float, 3> fg;
  std::array<float, 3> bg;
  float noise;
  bool stripes;
};

const Style kStyles[] = {
    {{0.85f, 0.15f, 0.10f}, {0.90f, 0.90f, 0.88f}, 0.04f, false},
    {{0.05f, 0.05f, 0.05f}, {1.00f, 1.00f, 1.00f}, 0.00f, false},
    {{0.95f, 0.85f, 0.10f}, {0.10f, 0.20f, 0.60f}, 0.02f, false},
    {{0.20f, 0.70f, 0.30f}, {0.55f, 0.40f, 0.30f}, 0.08f, true},
};

bool inside(int shape, double u, double v, double r) {
  // (u, v) relative to the centre, r the nominal radius.
  const double au = std::abs(u), av = std::abs(v);
  switch (shape % 7) {
    case 0: return u * u + v * v <= r * r;
    case 1: return au <= 0.8 * r && av <= 0.8 * r;
    case 2: return v <= 0.8 * r && v >= -r + 2.0 * au;
    case 3: return (au <= 0.3 * r && av <= r) || (av <= 0.3 * r && au <= r);
    case 4: { const double d = std::sqrt(u * u + v * v); return d <= r && d >= 0.55 * r; }
    case 5: return au <= r && av <= 0.35 * r;
    default: return au + av <= r;
  }
}

}  // namespace

int write_shapes_dataset(const std::filesystem::path& root, const ShapesDatasetSpec& spec) {
  if (spec.image_size < 8) throw InvalidArgument("shapes dataset: image_size must be >= 8");
  if (!spec.counts.empty() && spec.counts.size() != spec.domains.size()) {
    throw InvalidArgument("shapes dataset: counts must have one row per domain");
  }
  int written = 0;
  const int n = spec.image_size;
  for (std::size_t d = 0; d < spec.domains.size(); ++d) {
    const Style& st = kStyles[d % std::size(kStyles)];
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
      const int count = spec.counts.empty() ? spec.per_cell : spec.counts[d].at(c);
      const auto dir = root / spec.domains[d] / spec.classes[c];
      std::filesystem::create_directories(dir);
      Rng rng(derive_seed(spec.seed, d * 1000 + c));
      for (int k = 0; k < count; ++k) {
        Image img(n, n);
        const double r = n * rng.uniform(0.22, 0.34);
        const double cx = n * rng.uniform(0.38, 0.62), cy = n * rng.uniform(0.38, 0.62);
        std::array<float, 3> fg = st.fg;
        for (auto& ch : fg) ch = std::clamp(ch + static_cast<float>(rng.uniform(-0.08, 0.08)), 0.0f, 1.0f);
        for (int y = 0; y < n; ++y) {
          for (int x = 0; x < n; ++x) {
            const bool on = inside(static_cast<int>(c), x + 0.5 - cx, y + 0.5 - cy, r);
            for (int ch = 0; ch < 3; ++ch) {
              float v = on ? fg[ch] : st.bg[ch];
              if (!on && st.stripes && ((x + y) / 3) % 2 == 0) v *= 0.7f;
              v += st.noise * static_cast<float>(rng.uniform(-1.0, 1.0));
              img.at(ch, y, x) = std::clamp(v, 0.0f, 1.0f);
            }
          }
        }
        char name[32];
        std::snprintf(name, sizeof name, "%04d.png", k);
        save_png(img, dir / name);
        ++written;
      }
    }
  }
  return written;
}

}  // namespace cdga
