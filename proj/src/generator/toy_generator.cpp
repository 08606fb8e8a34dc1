#include "latentpatch/generator/toy_generator.hpp"

#include <cmath>

#include "latentpatch/core/base64.hpp"
#include "latentpatch/core/error.hpp"
#include "latentpatch/core/png_io.hpp"
#include "latentpatch/core/rng.hpp"
#include "latentpatch/kernels.hpp"

namespace lp {

namespace {

constexpr int kGridCells = ToyGenerator::kGrid * ToyGenerator::kGrid * ToyGenerator::kFeatures;

std::vector<float> gaussian_weights(Rng& rng, std::size_t n, double scale) {
  std::vector<float> w(n);
  for (float& v : w) v = static_cast<float>(rng.normal() * scale);
  return w;
}

void tanh_inplace(std::vector<float>& v) {
  for (float& x : v) x = std::tanh(x);
}

}  // namespace

ToyGenerator::ToyGenerator(GeneratorSpec spec) : Generator(std::move(spec)) {
  const auto d = static_cast<double>(this->spec().latent_dim);
  Rng rng(this->spec().seed, 0x6e6e);
  affine_w_ = gaussian_weights(rng, std::size_t(kGridCells) * this->spec().latent_dim, 1.2 / std::sqrt(d));
  affine_b_ = gaussian_weights(rng, kGridCells, 0.3);
  const double conv_scale = 1.6 / std::sqrt(9.0 * kFeatures);
  conv1_w_ = gaussian_weights(rng, std::size_t(kFeatures) * kFeatures * 9, conv_scale);
  conv1_b_ = gaussian_weights(rng, kFeatures, 0.1);
  conv2_w_ = gaussian_weights(rng, std::size_t(kFeatures) * kFeatures * 9, conv_scale);
  conv2_b_ = gaussian_weights(rng, kFeatures, 0.1);
  head_w_ = gaussian_weights(rng, std::size_t(3) * kFeatures, 3.0 / std::sqrt(double(kFeatures)));
  head_b_ = gaussian_weights(rng, 3, 0.2);
}

ImageBuffer ToyGenerator::run(std::span<const double> z) const {
  const std::size_t d = z.size();
  kernels::FeatureMap grid(kFeatures, kGrid, kGrid);
  for (int i = 0; i < kGridCells; ++i) {
    double acc = affine_b_[i];
    const float* row = affine_w_.data() + std::size_t(i) * d;
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * z[j];
    grid.data[i] = static_cast<float>(std::tanh(acc));
  }

  auto up1 = kernels::resize_bilinear(grid, 2 * kGrid, 2 * kGrid);
  auto f1 = kernels::conv3x3(up1, conv1_w_, conv1_b_, kFeatures);
  tanh_inplace(f1.data);
  auto up2 = kernels::resize_bilinear(f1, 4 * kGrid, 4 * kGrid);
  auto f2 = kernels::conv3x3(up2, conv2_w_, conv2_b_, kFeatures);
  tanh_inplace(f2.data);

  const int w = spec().out_width;
  const int h = spec().out_height;
  auto feat = kernels::resize_bilinear(f2, h, w);
  ImageBuffer out(w, h);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float acc = head_b_[c];
        for (int f = 0; f < kFeatures; ++f) {
          acc += head_w_[c * kFeatures + f] * feat.plane(f)[std::size_t(y) * w + x];
        }
        out.at(x, y, c) = 1.0f / (1.0f + std::exp(-acc));
      }
    }
  }
  return out;
}

IdentityGenerator::IdentityGenerator(GeneratorSpec spec) : Generator(std::move(spec)) {}

ImageBuffer IdentityGenerator::run(std::span<const double> z) const {
  std::vector<float> data(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i])) throw InvalidData("identity generator: non-finite latent");
    data[i] = static_cast<float>(std::clamp(z[i], 0.0, 1.0));
  }
  return ImageBuffer(spec().out_width, spec().out_height, std::move(data));
}

HttpGenerator::HttpGenerator(GeneratorSpec spec)
    : Generator(std::move(spec)), endpoint_(this->spec().endpoint, this->spec().http) {}

ImageBuffer HttpGenerator::run(std::span<const double> z) const {
  nlohmann::json req;
  req["latent"] = std::vector<double>(z.begin(), z.end());
  if (spec().class_id) req["class_id"] = *spec().class_id;
  req["width"] = spec().out_width;
  req["height"] = spec().out_height;
  auto resp = endpoint_.post("/generate", req);
  if (!resp.contains("patch_png_b64") || !resp["patch_png_b64"].is_string()) {
    throw OracleUnavailable(endpoint_.url() + ": generator response lacks patch_png_b64");
  }
  ImageBuffer patch;
  try {
    patch = decode_png(base64_decode(resp["patch_png_b64"].get<std::string>()));
  } catch (const InvalidData& e) {
    throw OracleUnavailable(endpoint_.url() + ": malformed patch: " + e.what());
  }
  if (patch.width() != spec().out_width || patch.height() != spec().out_height) {
    patch = resize_bilinear(patch, spec().out_width, spec().out_height);
  }
  return patch;
}

}  // namespace lp
