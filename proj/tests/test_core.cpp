#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "latentpatch/core/base64.hpp"
#include "latentpatch/core/error.hpp"
#include "latentpatch/core/geometry.hpp"
#include "latentpatch/core/image.hpp"
#include "latentpatch/core/latent.hpp"
#include "latentpatch/core/png_io.hpp"
#include "latentpatch/core/rng.hpp"
#include "support/reference.hpp"

using namespace lp;

TEST_CASE("iou examples") {
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
  CHECK(iou({0, 0, 10, 10}, {20, 20, 5, 5}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {1, 0, 2, 2}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou is symmetric, exact on identity and matches the reference") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> pos(-20, 80), size(0.5, 60);
  for (int i = 0; i < 2000; ++i) {
    BBox a{pos(gen), pos(gen), size(gen), size(gen)};
    BBox b{pos(gen), pos(gen), size(gen), size(gen)};
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, b) == doctest::Approx(ref::iou(a, b)).epsilon(1e-12));
    CHECK(iou(a, b) >= 0.0);
    CHECK(iou(a, b) <= 1.0);
  }
}

TEST_CASE("image buffer length and construction") {
  ImageBuffer img(5, 4);
  CHECK(img.size() == 5u * 4u * 3u);
  CHECK_THROWS_AS(ImageBuffer(2, 2, std::vector<float>(11)), InvalidArgument);
  CHECK_THROWS_AS(ImageBuffer(-1, 2), InvalidArgument);
}

TEST_CASE("clamp_image boundaries and idempotence") {
  ImageBuffer img(2, 1, std::vector<float>{0.0f, 0.5f, 1.0f, 1.5f, -0.2f, 0.25f});
  auto c = clamp_image(img);
  CHECK(c.at(0, 0, 0) == 0.0f);
  CHECK(c.at(0, 0, 1) == 0.5f);
  CHECK(c.at(0, 0, 2) == 1.0f);
  CHECK(c.at(1, 0, 0) == 1.0f);
  CHECK(c.at(1, 0, 1) == 0.0f);
  CHECK(c == clamp_image(c));

  std::mt19937_64 gen(3);
  auto inside = ref::random_image(gen, 7, 5);
  CHECK(clamp_image(inside) == inside);

  img.at(0, 0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(clamp_image(img), InvalidData);
}

TEST_CASE("resize keeps values in range and is the identity at equal size") {
  std::mt19937_64 gen(5);
  auto img = ref::random_image(gen, 13, 9);
  CHECK(resize_bilinear(img, 13, 9) == img);
  for (auto [w, h] : {std::pair{4, 4}, {31, 17}, {1, 1}, {64, 64}}) {
    auto r = resize_bilinear(img, w, h);
    CHECK(r.width() == w);
    CHECK(r.height() == h);
    for (float v : r.data()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
  ImageBuffer flat(6, 6, 0.3f);
  const auto up = resize_bilinear(flat, 17, 3);
  for (float v : up.data()) CHECK(v == doctest::Approx(0.3f));
}

TEST_CASE("quantize and 8-bit conversion round trip") {
  std::mt19937_64 gen(9);
  auto q = quantize_u8(ref::random_image(gen, 8, 8));
  CHECK(from_rgb8(8, 8, to_rgb8(q)) == q);
  CHECK(quantize_u8(q) == q);
}

TEST_CASE("png and base64 round trips") {
  std::mt19937_64 gen(4);
  auto q = quantize_u8(ref::random_image(gen, 23, 11));
  CHECK(decode_png(encode_png(q)) == q);
  std::vector<std::uint8_t> bytes{0, 1, 2, 250, 255, 17, 99};
  for (std::size_t n = 0; n <= bytes.size(); ++n) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + n);
    CHECK(base64_decode(base64_encode(part)) == part);
  }
  CHECK_THROWS_AS(base64_decode("not base64!"), InvalidData);
  CHECK_THROWS_AS(decode_png(std::vector<std::uint8_t>{1, 2, 3}), InvalidData);
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42, stream_id(1, 2, 3)), b(42, stream_id(1, 2, 3));
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42, stream_id(1, 2, 3));
  Rng d(42, stream_id(1, 2, 3));
  auto x = sample_gaussian(c, 5, 7);
  auto y = sample_gaussian(d, 5, 7);
  CHECK(x == y);
  CHECK(stream_id(1, 2, 3) != stream_id(3, 2, 1));
  CHECK(stream_id(0, 0, 1) != stream_id(0, 1, 0));
}

TEST_CASE("rng uniform and below stay in range") {
  Rng r(1, 2);
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7u);
  }
}

TEST_CASE("gaussian sampler moments") {
  Rng rng(2024, stream_id(7));
  const std::size_t n = 100000, d = 8;
  auto s = sample_gaussian(rng, n, d);
  REQUIRE(s.size() == n);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0, sq = 0;
    for (const auto& v : s) mean += v.values[j];
    mean /= n;
    for (const auto& v : s) sq += (v.values[j] - mean) * (v.values[j] - mean);
    const double var = sq / (n - 1);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
  }
}

TEST_CASE("distinct streams are uncorrelated") {
  Rng a(5, stream_id(0, 1)), b(5, stream_id(0, 2));
  const int n = 100000;
  double sab = 0, saa = 0, sbb = 0, ma = 0, mb = 0;
  std::vector<double> xa(n), xb(n);
  for (int i = 0; i < n; ++i) {
    xa[i] = a.normal();
    xb[i] = b.normal();
    ma += xa[i];
    mb += xb[i];
  }
  ma /= n;
  mb /= n;
  for (int i = 0; i < n; ++i) {
    sab += (xa[i] - ma) * (xb[i] - mb);
    saa += (xa[i] - ma) * (xa[i] - ma);
    sbb += (xb[i] - mb) * (xb[i] - mb);
  }
  CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.02);
}

TEST_CASE("latent vector helpers") {
  LatentVector z(std::vector<double>{1.0, -3.5, 2.0});
  CHECK(z.max_abs() == 3.5);
  CHECK(z.all_finite());
  z.values[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(z.all_finite());
}

TEST_CASE("argmax class") {
  Detection d;
  CHECK(d.argmax_class() == -1);
  d.class_probs = {0.1, 0.7, 0.2};
  CHECK(d.argmax_class() == 1);
}
