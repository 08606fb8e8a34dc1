#include "latentpatch/scenes/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "latentpatch/core/error.hpp"
#include "latentpatch/core/png_io.hpp"
#include "latentpatch/core/rng.hpp"
#include "latentpatch/oracles/person_template.hpp"

namespace lp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> aligned_scales(const CorpusSpec& spec) {
  std::vector<double> out;
  for (double s : kPersonScales) {
    if (s >= spec.min_scale && s <= spec.max_scale) out.push_back(s);
  }
  return out;
}

}  // namespace

void CorpusSpec::validate() const {
  if (count < 1) throw InvalidArgument("corpus count must be >= 1");
  if (persons_per_scene < 0) throw InvalidArgument("persons_per_scene must be >= 0");
  if (!(min_scale > 0.0 && min_scale <= max_scale)) throw InvalidArgument("invalid person scale range");
  if (grid_aligned && persons_per_scene > 0 && aligned_scales(*this).empty()) {
    throw InvalidArgument("no detector scale lies inside [min_scale, max_scale]");
  }
  int need_w = static_cast<int>(std::ceil(kPersonBaseWidth * max_scale)) + 8;
  int need_h = static_cast<int>(std::ceil(kPersonBaseHeight * max_scale)) + 8;
  if (image_width < need_w || image_height < need_h) {
    throw InvalidArgument("corpus images too small for the configured person scale");
  }
}

namespace {

std::array<float, 3> random_color(Rng& rng, double lo, double hi) {
  return {float(rng.uniform(lo, hi)), float(rng.uniform(lo, hi)), float(rng.uniform(lo, hi))};
}

void fill_gradient(ImageBuffer& img, Rng& rng) {
  auto c0 = random_color(rng, 0.15, 0.85);
  auto c1 = random_color(rng, 0.15, 0.85);
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double cx = std::cos(theta), sy = std::sin(theta);
  const double span = std::abs(cx) * img.width() + std::abs(sy) * img.height();
  const double off = std::min(0.0, cx * img.width()) + std::min(0.0, sy * img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double t = (cx * x + sy * y - off) / span;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = float(c0[c] + (c1[c] - c0[c]) * t);
    }
  }
}

void fill_noise(ImageBuffer& img, Rng& rng) {
  auto base = random_color(rng, 0.25, 0.75);
  constexpr int kGrid = 9;
  std::vector<float> grid(kGrid * kGrid * 3);
  for (float& g : grid) g = float(rng.uniform(-0.2, 0.2));
  for (int y = 0; y < img.height(); ++y) {
    double gy = double(y) / (img.height() - 1) * (kGrid - 1);
    int y0 = std::min(int(gy), kGrid - 2);
    double wy = gy - y0;
    for (int x = 0; x < img.width(); ++x) {
      double gx = double(x) / (img.width() - 1) * (kGrid - 1);
      int x0 = std::min(int(gx), kGrid - 2);
      double wx = gx - x0;
      for (int c = 0; c < 3; ++c) {
        auto g = [&](int i, int j) { return grid[(j * kGrid + i) * 3 + c]; };
        double v = (g(x0, y0) * (1 - wx) + g(x0 + 1, y0) * wx) * (1 - wy) +
                   (g(x0, y0 + 1) * (1 - wx) + g(x0 + 1, y0 + 1) * wx) * wy;
        img.at(x, y, c) = float(base[c] + v + rng.uniform(-0.06, 0.06));
      }
    }
  }
}

void fill_tiles(ImageBuffer& img, Rng& rng) {
  auto base = random_color(rng, 0.3, 0.7);
  const int tile = 32 << rng.below(2);
  const int tx = (img.width() + tile - 1) / tile;
  const int ty = (img.height() + tile - 1) / tile;
  std::vector<float> colors(std::size_t(tx) * ty * 3);
  for (float& v : colors) v = float(rng.uniform(-0.1, 0.1));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const std::size_t t = std::size_t(y / tile) * tx + (x / tile);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = base[c] + colors[t * 3 + c];
    }
  }
}

bool overlaps(const BBox& a, const std::vector<BBox>& placed, double gap) {
  for (const auto& b : placed) {
    if (a.x < b.x + b.w + gap && b.x < a.x + a.w + gap && a.y < b.y + b.h + gap && b.y < a.y + a.h + gap) {
      return true;
    }
  }
  return false;
}

Scene render_scene(const CorpusSpec& spec, int index) {
  Rng rng(spec.seed, stream_id(0x5ce7e, static_cast<std::uint64_t>(index)));
  Scene scene;
  char suffix[16];
  std::snprintf(suffix, sizeof(suffix), "_%04d", index);
  scene.id = spec.id_prefix + suffix;
  scene.image = ImageBuffer(spec.image_width, spec.image_height);

  BackgroundKind kind = spec.background;
  if (kind == BackgroundKind::mixed) kind = static_cast<BackgroundKind>(index % 3);
  switch (kind) {
    case BackgroundKind::gradient: fill_gradient(scene.image, rng); break;
    case BackgroundKind::noise: fill_noise(scene.image, rng); break;
    case BackgroundKind::tiles: fill_tiles(scene.image, rng); break;
    case BackgroundKind::mixed: break;
  }

  const std::vector<double> levels = aligned_scales(spec);
  for (int p = 0; p < spec.persons_per_scene; ++p) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      double s = spec.grid_aligned ? levels[rng.below(levels.size())]
                                   : rng.uniform(spec.min_scale, spec.max_scale);
      int w = static_cast<int>(std::lround(kPersonBaseWidth * s));
      int h = static_cast<int>(std::lround(kPersonBaseHeight * s));
      int x, y;
      if (spec.grid_aligned) {
        const int g = kPersonGrid;
        x = g * (1 + static_cast<int>(rng.below(std::uint64_t((spec.image_width - w) / g - 1))));
        y = g * (1 + static_cast<int>(rng.below(std::uint64_t((spec.image_height - h) / g - 1))));
      } else {
        x = 2 + static_cast<int>(rng.below(std::uint64_t(spec.image_width - w - 3)));
        y = 2 + static_cast<int>(rng.below(std::uint64_t(spec.image_height - h - 3)));
      }
      BBox box{double(x), double(y), double(w), double(h)};
      if (overlaps(box, scene.gt_boxes, 8.0)) continue;
      RasterPerson person = rasterize_person(w, h);
      for (int py = 0; py < h; ++py) {
        for (int px = 0; px < w; ++px) {
          float a = person.alpha[std::size_t(py) * w + px];
          if (a <= 0.0f) continue;
          for (int c = 0; c < 3; ++c) {
            float& dst = scene.image.at(x + px, y + py, c);
            dst = a * person.rgb.at(px, py, c) + (1.0f - a) * dst;
          }
        }
      }
      scene.gt_boxes.push_back(box);
      break;
    }
  }
  scene.image = quantize_u8(clamp_image(scene.image));
  return scene;
}

void validate_box(const BBox& b, int width, int height, const std::string& where) {
  if (!(b.w > 0.0 && b.h > 0.0)) throw ValidationError(where + ": person box must have w > 0 and h > 0");
  if (b.x < 0.0 || b.y < 0.0 || b.x + b.w > width || b.y + b.h > height) {
    throw ValidationError(where + ": person box lies outside the " + std::to_string(width) + "x" +
                          std::to_string(height) + " image");
  }
}

}  // namespace

std::vector<Scene> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::vector<Scene> scenes(spec.count);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < spec.count; ++i) scenes[i] = render_scene(spec, i);
  return scenes;
}

void save_corpus(const fs::path& dir, const std::vector<Scene>& scenes) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& s : scenes) {
    write_png(dir / (s.id + ".png"), s.image);
    json persons = json::array();
    for (const auto& b : s.gt_boxes) persons.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}});
    std::ofstream out(dir / (s.id + ".json"));
    if (!out) throw InvalidArgument("cannot write annotation for " + s.id);
    out << json{{"persons", persons}}.dump(2) << "\n";
  }
}

LoadedCorpus load_corpus(const fs::path& dir, const LoadOptions& options) {
  if (!fs::is_directory(dir)) throw InvalidArgument(dir.string() + " is not a directory");
  std::vector<fs::path> pngs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") pngs.push_back(entry.path());
  }
  std::sort(pngs.begin(), pngs.end());

  LoadedCorpus out;
  if (pngs.empty()) out.warnings.push_back(dir.string() + ": no PNG files, corpus is empty");
  for (const auto& png : pngs) {
    fs::path sidecar = png;
    sidecar.replace_extension(".json");
    if (!fs::exists(sidecar)) {
      if (options.strict) throw ValidationError(png.string() + ": missing annotation " + sidecar.filename().string());
      out.warnings.push_back(png.string() + ": missing annotation, skipped");
      continue;
    }
    Scene scene;
    scene.id = png.stem().string();
    scene.image = read_png(png);
    json ann;
    try {
      std::ifstream in(sidecar);
      ann = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError(sidecar.string() + ": invalid JSON: " + e.what());
    }
    if (!ann.is_object() || !ann.contains("persons") || !ann["persons"].is_array()) {
      throw ValidationError(sidecar.string() + ": expected {\"persons\": [...]}");
    }
    for (const auto& p : ann["persons"]) {
      BBox b;
      for (auto [key, field] : {std::pair{"x", &b.x}, {"y", &b.y}, {"w", &b.w}, {"h", &b.h}}) {
        if (!p.is_object() || !p.contains(key) || !p[key].is_number()) {
          throw ValidationError(sidecar.string() + ": person entry lacks numeric '" + key + "'");
        }
        *field = p[key].get<double>();
      }
      validate_box(b, scene.image.width(), scene.image.height(), sidecar.string());
      scene.gt_boxes.push_back(b);
    }
    out.scenes.push_back(std::move(scene));
  }
  return out;
}

void save_split_corpus(const fs::path& root, const SplitCorpus& corpus) {
  save_corpus(root / "train", corpus.train);
  save_corpus(root / "eval", corpus.eval);
}

SplitCorpus load_split_corpus(const fs::path& root, const LoadOptions& options) {
  SplitCorpus out;
  out.train = load_corpus(root / "train", options).scenes;
  out.eval = load_corpus(root / "eval", options).scenes;
  return out;
}

}  // namespace lp
