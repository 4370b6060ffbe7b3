#include <doctest.h>

#include <set>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/core/hash.hpp"
#include "cdga/core/image.hpp"
#include "cdga/core/rng.hpp"
#include "support.hpp"

using namespace cdga;

TEST_CASE("rng is reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(5) < 5u);
  }
}

TEST_CASE("rng normal has roughly unit moments") {
  Rng r(1);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::abs(s / n) < 0.03);
  CHECK(std::abs(s2 / n - 1.0) < 0.05);
}

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 100; ++s) seen.insert(derive_seed(5, s));
  CHECK(seen.size() == 100);
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
  CHECK(derive_seed(5, 3) != derive_seed(6, 3));
}

TEST_CASE("shuffle is a permutation") {
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  Rng r(3);
  r.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  CHECK(s.size() == 8);
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex(std::string_view("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("fnv1a64 known vector and hex") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(to_hex(0xabcULL) == "0000000000000abc");
}

TEST_CASE("base64 round trip") {
  for (std::string s : {"", "f", "fo", "foo", "foob", "fooba", "foobar"}) {
    const std::vector<std::uint8_t> bytes(s.begin(), s.end());
    CHECK(base64_decode(base64_encode(bytes)) == bytes);
  }
  const std::string foobar = "foobar";
  CHECK(base64_encode(std::vector<std::uint8_t>(foobar.begin(), foobar.end())) == "Zm9vYmFy");
}

TEST_CASE("atomic write and json round trip") {
  test::TempDir dir;
  const auto p = dir / "a/b/c.json";
  write_json(p, {{"x", 1}, {"y", {1, 2, 3}}});
  CHECK(read_json(p).at("x") == 1);
  atomic_write(p, std::string_view("{bad"));
  CHECK_THROWS_AS(read_json(p), IoError);
  CHECK_THROWS_AS(read_text(dir / "missing"), IoError);
}

TEST_CASE("append_line appends") {
  test::TempDir dir;
  append_line(dir / "l.txt", "one");
  append_line(dir / "l.txt", "two");
  CHECK(read_text(dir / "l.txt") == "one\ntwo\n");
}

TEST_CASE("png encode/decode is lossless at 8 bits") {
  Image img(4, 5);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i % 256) / 255.0f;
  const auto bytes = encode_png(img);
  const auto back = decode_image(bytes);
  REQUIRE(back);
  CHECK(back->height == 4);
  CHECK(back->width == 5);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(back->pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-6));
  CHECK(encode_png(img) == bytes);
}

TEST_CASE("undecodable bytes give nullopt") {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4};
  CHECK_FALSE(decode_image(junk));
}

TEST_CASE("resize keeps constant images constant") {
  Image img(10, 10, 0.25f);
  const auto small = resize(img, 4, 4);
  CHECK(small.height == 4);
  for (float v : small.pixels) CHECK(v == doctest::Approx(0.25f));
  const auto big = resize(img, 20, 20);
  for (float v : big.pixels) CHECK(v == doctest::Approx(0.25f));
}

TEST_CASE("image extensions are case-insensitive") {
  CHECK(has_image_extension("a.JPG"));
  CHECK(has_image_extension("a.jpeg"));
  CHECK(has_image_extension("a.Png"));
  CHECK_FALSE(has_image_extension("a.gif"));
  CHECK_FALSE(has_image_extension("README"));
}
