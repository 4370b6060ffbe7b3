#include <doctest.h>

#include <cmath>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/core/rng.hpp"
#include "cdga/dataset/counts.hpp"
#include "cdga/dataset/manifest.hpp"
#include "support.hpp"

using namespace cdga;

TEST_CASE("scan: two domains, one class, three files each") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"photo", "art"}, {"dog"}, {{3}, {3}});
  const auto m = scan_dataset(dir.path());
  CHECK(m.entries.size() == 6);
  CHECK(m.domains == std::vector<std::string>{"art", "photo"});
  CHECK(m.classes == std::vector<std::string>{"dog"});
  CHECK(m.warnings.empty());
  CHECK(m.entries.front().id == "art/dog/img0");
  m.validate();

  const auto counts = count_per_class_domain(m);
  CHECK(counts.counts == std::vector<std::vector<std::int64_t>>{{3}, {3}});
}

TEST_CASE("scan: empty root") {
  test::TempDir dir;
  const auto m = scan_dataset(dir.path());
  CHECK(m.domains.empty());
  CHECK(m.entries.empty());
}

TEST_CASE("scan: stray README at class level is skipped with a warning") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"photo", "art"}, {"dog"}, {{3}, {3}});
  atomic_write(dir / "art/dog/README", std::string_view("notes"));
  const auto m = scan_dataset(dir.path());
  CHECK(m.entries.size() == 6);
  CHECK(m.warnings.size() == 1);
}

TEST_CASE("scan: missing root is fatal") {
  CHECK_THROWS_AS(scan_dataset("/nonexistent/cdga/root"), IoError);
}

TEST_CASE("scan: empty class directory warns") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"a"}, {"x"}, {{2}});
  std::filesystem::create_directories(dir / "a/y");
  const auto m = scan_dataset(dir.path());
  CHECK(m.entries.size() == 2);
  CHECK(m.warnings.size() == 1);
  CHECK(m.classes == std::vector<std::string>{"x", "y"});
}

TEST_CASE("scan is idempotent and survives a JSON round trip") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"b", "a", "c"}, {"k2", "k1"}, {{1, 2}, {3, 0}, {2, 2}});
  const auto m1 = scan_dataset(dir.path());
  const auto m2 = scan_dataset(dir.path());
  CHECK(to_json(m1) == to_json(m2));
  save_manifest(m1, dir / "m.json");
  const auto m3 = load_manifest(dir / "m.json");
  CHECK(m3.entries == m1.entries);
  CHECK(m3.domains == m1.domains);
}

TEST_CASE("counts: rows and columns") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"art"}, {"cat", "dog"}, {{5, 2}});
  const auto c = count_per_class_domain(scan_dataset(dir.path()));
  // classes sorted: cat, dog
  CHECK(c.counts[0] == std::vector<std::int64_t>{5, 2});
  CHECK(c.domain_total(0) == 7);
  CHECK(c.class_total(1) == 2);
}

TEST_CASE("counts: max cell is m") {
  CountTable t{{{100, 40}, {12, 7}, {55, 99}}};
  CHECK(t.max_cell() == 100);
}

TEST_CASE("balanced batch sizes use the ceil rule") {
  CHECK(balanced_batch_sizes(CountTable{{{100}, {25}}}).b == std::vector<std::vector<std::optional<int>>>{{1}, {4}});
  CHECK(balanced_batch_sizes(CountTable{{{100}, {33}}}).b == std::vector<std::vector<std::optional<int>>>{{1}, {4}});
  CHECK(balanced_batch_sizes(CountTable{{{7}, {7}}}).b == std::vector<std::vector<std::optional<int>>>{{1}, {1}});
  const auto holes = balanced_batch_sizes(CountTable{{{10, 0}}});
  CHECK(holes.at(0, 0) == 1);
  CHECK_FALSE(holes.at(0, 1).has_value());
  CHECK_THROWS_AS(balanced_batch_sizes(CountTable{{{0, 0}}}), InvalidArgument);
}

TEST_CASE("balanced property: count*b >= m and count*(b-1) < m") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    CountTable t;
    const int d = 1 + static_cast<int>(rng.below(4)), c = 1 + static_cast<int>(rng.below(5));
    t.counts.assign(static_cast<std::size_t>(d), std::vector<std::int64_t>(static_cast<std::size_t>(c)));
    for (auto& row : t.counts) for (auto& v : row) v = static_cast<std::int64_t>(rng.below(150));
    if (t.max_cell() == 0) continue;
    const auto b = balanced_batch_sizes(t);
    const auto m = t.max_cell();
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < c; ++k) {
        const auto cnt = t.counts[j][k];
        if (cnt == 0) {
          CHECK_FALSE(b.at(j, k).has_value());
          continue;
        }
        REQUIRE(b.at(j, k).has_value());
        CHECK(cnt * *b.at(j, k) >= m);
        CHECK(cnt * (*b.at(j, k) - 1) < m);
      }
    }
  }
}

TEST_CASE("augmented_size formulas") {
  CHECK(augmented_size(100, 3, 1, AugmentationKind::kCdgaPg) == 400);
  CHECK(augmented_size(100, 3, 1, AugmentationKind::kCdgaStarPg) == 500);
  CHECK(augmented_size(100, 3, 2, AugmentationKind::kCdgaPg) == 700);
  CHECK(augmented_size(100, 3, 2, AugmentationKind::kCdgaIg) == 700);
  CHECK(augmented_size(10, 3, 2, AugmentationKind::kSdgaPgLabel) == 30);
  CHECK(augmented_size(0, 3, 2, AugmentationKind::kCdgaPg) == 0);
}

TEST_CASE("augmented_size is linear in b") {
  for (int n = 1; n <= 5; ++n) {
    for (int b = 2; b <= 6; ++b) {
      for (std::int64_t count : {0, 1, 17, 100}) {
        CHECK(augmented_size(count, n, b, AugmentationKind::kCdgaPg) -
                  augmented_size(count, n, b - 1, AugmentationKind::kCdgaPg) ==
              n * count);
      }
    }
  }
}

TEST_CASE("augmentation kind names round trip") {
  for (auto k : {AugmentationKind::kCdgaPg, AugmentationKind::kCdgaIg, AugmentationKind::kCdgaStarPg,
                 AugmentationKind::kSdgaPgLabel, AugmentationKind::kSdgaPgLabelDomain,
                 AugmentationKind::kSdgaIgLabel}) {
    CHECK(parse_augmentation_kind(to_string(k)) == k);
  }
  CHECK_THROWS(parse_augmentation_kind("CDGA_XX"));
}

TEST_CASE("augmentation mode: CDGA* needs a target description") {
  AugmentationMode mode;
  mode.kind = AugmentationKind::kCdgaStarPg;
  mode.b = 1;
  CHECK_THROWS_AS(mode.validate(), InvalidArgument);
  mode.target_description = "pencil sketch";
  CHECK_NOTHROW(mode.validate());
}

TEST_CASE("synthetic shapes dataset layout") {
  test::TempDir dir;
  ShapesDatasetSpec spec;
  spec.per_cell = 2;
  CHECK(write_shapes_dataset(dir.path(), spec) == 18);
  const auto m = scan_dataset(dir.path());
  CHECK(m.entries.size() == 18);
  CHECK(m.domains.size() == 3);
}
