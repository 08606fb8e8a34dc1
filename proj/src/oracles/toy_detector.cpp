#include "latentpatch/oracles/toy_detector.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "latentpatch/core/rng.hpp"
#include "latentpatch/oracles/person_template.hpp"

namespace lp {

namespace {

// Cell-level template: per cell, the silhouette coverage and the mean color
// of the covered part, from 16x16 supersampling of the figure.
kernels::CellTemplate build_template(double scale) {
  const int px_w = static_cast<int>(std::lround(kPersonBaseWidth * scale));
  const int px_h = static_cast<int>(std::lround(kPersonBaseHeight * scale));
  const int cw = px_w / ToyDetector::kCell;
  const int ch = px_h / ToyDetector::kCell;
  constexpr int kSub = 4 * ToyDetector::kCell;

  const std::size_t n = std::size_t(cw) * ch;
  std::vector<double> cov(n, 0.0);
  std::vector<double> col(3 * n, 0.0);
  const double weight = 1.0 / (kSub * kSub);
  for (int cy = 0; cy < ch; ++cy) {
    for (int cx = 0; cx < cw; ++cx) {
      const std::size_t i = std::size_t(cy) * cw + cx;
      for (int py = 0; py < kSub; ++py) {
        for (int px = 0; px < kSub; ++px) {
          const double x = (cx + (px + 0.5) / kSub) * ToyDetector::kCell;
          const double y = (cy + (py + 0.5) / kSub) * ToyDetector::kCell;
          TemplateSample t = person_template(x / px_w, y / px_h);
          if (t.coverage <= 0.0f) continue;
          cov[i] += weight;
          for (int c = 0; c < 3; ++c) col[c * n + i] += weight * t.rgb[c];
        }
      }
    }
  }

  // Cells mostly outside the silhouette show background and are left out of
  // the match.
  std::vector<unsigned char> keep(n);
  std::vector<double> raw(3 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    keep[i] = cov[i] >= 0.5;
    if (cov[i] > 0.0)
      for (int c = 0; c < 3; ++c) raw[c * n + i] = col[c * n + i] / cov[i];
  }
  return kernels::make_cell_template(ch, cw, raw, keep);
}

struct Candidate {
  double objectness;
  std::size_t scale;
  int y;
  int x;
};

}  // namespace

ToyDetector::ToyDetector(DetectorSpec spec) : Detector(std::move(spec)) {
  for (double s : kScales) templates_.push_back(build_template(s));
  fft_ = std::make_unique<kernels::FftMatcher>(this->spec().input_height / kCell, this->spec().input_width / kCell,
                                               templates_);
}

double ToyDetector::objectness_from_score(double score) {
  return 1.0 / (1.0 + std::exp(-kGain * (score - kOffset)));
}

kernels::FeatureMap ToyDetector::to_cells(const ImageBuffer& img) {
  static_assert(kCell == 4);
  const int cw = img.width() / kCell;
  const int ch = img.height() / kCell;
  kernels::FeatureMap cells(3, ch, cw);
  float* r = cells.plane(0);
  float* g = cells.plane(1);
  float* b = cells.plane(2);
  constexpr float inv = 1.0f / (kCell * kCell);
  for (int cy = 0; cy < ch; ++cy) {
    const std::size_t o = std::size_t(cy) * cw;
    for (int dy = 0; dy < kCell; ++dy) {
      const float* row = img.data().data() + (std::size_t(cy) * kCell + dy) * img.width() * 3;
      for (int cx = 0; cx < cw; ++cx) {
        const float* p = row + std::size_t(cx) * 12;
        r[o + cx] += (p[0] + p[3]) + (p[6] + p[9]);
        g[o + cx] += (p[1] + p[4]) + (p[7] + p[10]);
        b[o + cx] += (p[2] + p[5]) + (p[8] + p[11]);
      }
    }
  }
  for (float& v : cells.data) v *= inv;
  return cells;
}

std::vector<std::vector<float>> ToyDetector::score_maps(const ImageBuffer& img) const {
  return fft_->score_maps(to_cells(img));
}

std::vector<Detection> ToyDetector::run(const ImageBuffer& img) const {
  auto cells = to_cells(img);
  return detections_from_maps(cells, fft_->score_maps(cells));
}

std::vector<Detection> ToyDetector::detect_direct(const ImageBuffer& img) const {
  auto cells = to_cells(img);
  return detections_from_maps(cells, kernels::match_score_maps(cells, templates_));
}

std::vector<Detection> ToyDetector::detect_reference(const ImageBuffer& img) const {
  auto cells = to_cells(img);
  std::vector<std::vector<float>> maps;
  for (const auto& tpl : templates_) maps.push_back(kernels::match_score_map_reference(cells, tpl));
  return detections_from_maps(cells, maps);
}

std::vector<Detection> ToyDetector::detections_from_maps(
    const kernels::FeatureMap& cells, const std::vector<std::vector<float>>& maps) const {
  const double score_floor = kOffset + std::log(spec().score_threshold / (1.0 - spec().score_threshold)) / kGain;
  std::vector<Candidate> cands;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto& map = maps[k];
    const int out_w = cells.width - templates_[k].width + 1;
    const int out_h = cells.height - templates_[k].height + 1;
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        const float s = map[std::size_t(y) * out_w + x];
        if (s < score_floor) continue;
        bool peak = true;
        for (int dy = -1; dy <= 1 && peak; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            int ny = y + dy, nx = x + dx;
            if ((dx == 0 && dy == 0) || ny < 0 || nx < 0 || ny >= out_h || nx >= out_w) continue;
            if (map[std::size_t(ny) * out_w + nx] > s) {
              peak = false;
              break;
            }
          }
        }
        if (!peak) continue;
        double obj = objectness_from_score(s);
        if (obj >= spec().score_threshold) cands.push_back({obj, k, y, x});
      }
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.objectness != b.objectness) return a.objectness > b.objectness;
    return std::tie(a.scale, a.y, a.x) < std::tie(b.scale, b.y, b.x);
  });

  const int k_classes = spec().num_classes;
  std::vector<double> probs(k_classes, k_classes > 1 ? (1.0 - kPersonProb) / (k_classes - 1) : 1.0);
  probs[spec().person_class_index] = k_classes > 1 ? kPersonProb : 1.0;

  std::vector<Detection> kept;
  for (const auto& c : cands) {
    const auto& tpl = templates_[c.scale];
    BBox box{double(c.x * kCell), double(c.y * kCell), double(tpl.width * kCell),
             double(tpl.height * kCell)};
    bool suppressed = false;
    for (const auto& d : kept) {
      if (iou(d.bbox, box) > kNmsIou) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back({box, c.objectness, probs});
  }
  return kept;
}

ToyClassifier::ToyClassifier(ClassifierSpec spec) : Classifier(std::move(spec)) {
  Rng rng(this->spec().seed, 0xc1a55);
  // Prototype colors are drawn with rejection so that every pair is at least
  // 0.3 apart; texture energies stay small so color dominates.
  while (static_cast<int>(prototypes_.size()) < this->spec().num_classes) {
    Prototype p{{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)},
                rng.uniform(0.0, 0.08)};
    bool ok = true;
    for (const auto& q : prototypes_) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) d2 += (p.color[c] - q.color[c]) * (p.color[c] - q.color[c]);
      if (d2 < 0.09) ok = false;
    }
    if (ok || prototypes_.size() > 64) prototypes_.push_back(p);
  }
}

std::array<double, 4> ToyClassifier::features(const ImageBuffer& patch) {
  std::array<double, 4> f{};
  const int w = patch.width();
  const int h = patch.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) f[c] += patch.at(x, y, c);
  for (int c = 0; c < 3; ++c) f[c] /= double(w) * h;
  double tex = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        if (x + 1 < w) tex += std::abs(double(patch.at(x + 1, y, c)) - patch.at(x, y, c));
        if (y + 1 < h) tex += std::abs(double(patch.at(x, y + 1, c)) - patch.at(x, y, c));
      }
    }
  }
  f[3] = tex / (3.0 * (double(w - 1) * h + double(h - 1) * w));
  return f;
}

std::vector<double> ToyClassifier::run(const ImageBuffer& patch) const {
  auto f = features(patch);
  const int k = spec().num_classes;
  std::vector<double> logits(k);
  for (int i = 0; i < k; ++i) {
    const auto& p = prototypes_[i];
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) d2 += (f[c] - p.color[c]) * (f[c] - p.color[c]);
    d2 += kTextureWeight * (f[3] - p.texture) * (f[3] - p.texture);
    logits[i] = -d2 / kTemperature;
  }
  double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - mx);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

}  // namespace lp
