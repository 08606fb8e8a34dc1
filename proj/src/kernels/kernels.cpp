#include "latentpatch/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include "latentpatch/core/error.hpp"

namespace lp::kernels {

FeatureMap resize_bilinear(const FeatureMap& in, int height, int width) {
  FeatureMap out(in.channels, height, width);
  const double sx = static_cast<double>(in.width) / width;
  const double sy = static_cast<double>(in.height) / height;
  const int max_x = in.width - 1;
  const int max_y = in.height - 1;

  std::vector<int> x0(width), x1(width);
  std::vector<float> wx(width);
  for (int x = 0; x < width; ++x) {
    double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(max_x));
    x0[x] = static_cast<int>(fx);
    x1[x] = std::min(x0[x] + 1, max_x);
    wx[x] = static_cast<float>(fx - x0[x]);
  }
  for (int c = 0; c < in.channels; ++c) {
    const float* src = in.plane(c);
    float* dst = out.plane(c);
    for (int y = 0; y < height; ++y) {
      double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(max_y));
      int y0 = static_cast<int>(fy);
      int y1 = std::min(y0 + 1, max_y);
      float wy = static_cast<float>(fy - y0);
      const float* r0 = src + std::size_t(y0) * in.width;
      const float* r1 = src + std::size_t(y1) * in.width;
      for (int x = 0; x < width; ++x) {
        float top = r0[x0[x]] + (r0[x1[x]] - r0[x0[x]]) * wx[x];
        float bot = r1[x0[x]] + (r1[x1[x]] - r1[x0[x]]) * wx[x];
        dst[std::size_t(y) * width + x] = top + (bot - top) * wy;
      }
    }
  }
  return out;
}

namespace {

void check_conv_args(const FeatureMap& in, std::span<const float> weights,
                     std::span<const float> bias, int out_channels) {
  if (weights.size() != std::size_t(out_channels) * in.channels * 9 ||
      bias.size() != std::size_t(out_channels)) {
    throw InvalidArgument("conv3x3: weight or bias size mismatch");
  }
}

// One output channel. Rows are processed in order, taps in (ci, ky, kx)
// order, so every element sees the same sequence of float operations no
// matter which thread runs it.
void conv3x3_channel(const FeatureMap& in, std::span<const float> weights, float bias,
                     int co, float* dst, std::vector<float>& padded_row) {
  const int w = in.width;
  const int h = in.height;
  for (int y = 0; y < h; ++y) {
    float* out_row = dst + std::size_t(y) * w;
    std::fill(out_row, out_row + w, bias);
    for (int ci = 0; ci < in.channels; ++ci) {
      const float* plane = in.plane(ci);
      const float* k = weights.data() + (std::size_t(co) * in.channels + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        int sy = std::clamp(y + ky - 1, 0, h - 1);
        const float* row = plane + std::size_t(sy) * w;
        padded_row[0] = row[0];
        std::copy(row, row + w, padded_row.begin() + 1);
        padded_row[w + 1] = row[w - 1];
        for (int kx = 0; kx < 3; ++kx) {
          const float kv = k[ky * 3 + kx];
          const float* src = padded_row.data() + kx;
          for (int x = 0; x < w; ++x) out_row[x] += kv * src[x];
        }
      }
    }
  }
}

}  // namespace

FeatureMap conv3x3(const FeatureMap& in, std::span<const float> weights,
                   std::span<const float> bias, int out_channels) {
  check_conv_args(in, weights, bias, out_channels);
  FeatureMap out(out_channels, in.height, in.width);
#pragma omp parallel
  {
    std::vector<float> padded(in.width + 2);
#pragma omp for schedule(static)
    for (int co = 0; co < out_channels; ++co) {
      conv3x3_channel(in, weights, bias[co], co, out.plane(co), padded);
    }
  }
  return out;
}

FeatureMap conv3x3_reference(const FeatureMap& in, std::span<const float> weights,
                             std::span<const float> bias, int out_channels) {
  check_conv_args(in, weights, bias, out_channels);
  FeatureMap out(out_channels, in.height, in.width);
  const int w = in.width;
  const int h = in.height;
  for (int co = 0; co < out_channels; ++co) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float acc = bias[co];
        for (int ci = 0; ci < in.channels; ++ci) {
          const float* k = weights.data() + (std::size_t(co) * in.channels + ci) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            int sy = std::clamp(y + ky - 1, 0, h - 1);
            for (int kx = 0; kx < 3; ++kx) {
              int sx = std::clamp(x + kx - 1, 0, w - 1);
              acc += k[ky * 3 + kx] * in.plane(ci)[std::size_t(sy) * w + sx];
            }
          }
        }
        out.plane(co)[std::size_t(y) * w + x] = acc;
      }
    }
  }
  return out;
}

namespace {

void check_match_args(const FeatureMap& cells, const CellTemplate& tpl) {
  if (cells.channels != 3) throw InvalidArgument("match: expected 3-channel cells");
  if (tpl.height < 1 || tpl.width < 1 ||
      tpl.weights.size() != std::size_t(3) * tpl.height * tpl.width) {
    throw InvalidArgument("match: template size mismatch");
  }
  if (!(tpl.norm > 0.0)) throw InvalidArgument("match: template has no energy");
}

constexpr int kLanes = 16;
using Lanes = float __attribute__((vector_size(kLanes * sizeof(float))));

// Accumulates one output row, kLanes outputs at a time in a vector register.
// The row length is padded to a multiple of kLanes by the caller so there is
// no scalar tail. Zero taps (masked cells) are skipped.
__attribute__((target_clones("avx512f", "avx2", "default")))
void correlate_row(const float* plane, int W, const float* t, int th, int tw, int y, int out_w,
                   float* acc) {
  for (int x0 = 0; x0 < out_w; x0 += kLanes) {
    Lanes block;
    std::memcpy(&block, acc + x0, sizeof(block));
    for (int ty = 0; ty < th; ++ty) {
      const float* row = plane + std::size_t(y + ty) * W + x0;
      const float* trow = t + ty * tw;
      for (int tx = 0; tx < tw; ++tx) {
        if (trow[tx] == 0.0f) continue;
        Lanes src;
        std::memcpy(&src, row + tx, sizeof(src));
        block += trow[tx] * src;
      }
    }
    std::memcpy(acc + x0, &block, sizeof(block));
  }
}

std::vector<float> score_one(const FeatureMap& cells, const std::vector<float>& padded,
                             const CellTemplate& tpl) {
  const int W = cells.width;
  const int th = tpl.height;
  const int tw = tpl.width;
  const int out_w = W - tw + 1;
  const int out_h = cells.height - th + 1;
  if (out_w <= 0 || out_h <= 0) return {};
  const int out_w_pad = (out_w + kLanes - 1) / kLanes * kLanes;
  const std::size_t plane_size = std::size_t(cells.height) * W;
  const double inv_energy = 1.0 / (tpl.norm * tpl.norm);

  std::vector<float> out(std::size_t(out_w) * out_h);
#pragma omp parallel
  {
    std::vector<float> acc(out_w_pad);
#pragma omp for schedule(static)
    for (int y = 0; y < out_h; ++y) {
      std::fill(acc.begin(), acc.end(), 0.0f);
      for (int c = 0; c < 3; ++c) {
        correlate_row(padded.data() + c * plane_size, W,
                      tpl.weights.data() + std::size_t(c) * th * tw, th, tw, y, out_w_pad,
                      acc.data());
      }
      for (int x = 0; x < out_w; ++x) {
        out[std::size_t(y) * out_w + x] = static_cast<float>(acc[x] * inv_energy);
      }
    }
  }
  return out;
}

}  // namespace

CellTemplate make_cell_template(int height, int width, std::span<const double> raw,
                                std::span<const unsigned char> keep) {
  if (height < 1 || width < 1 || raw.size() != std::size_t(3) * height * width) {
    throw InvalidArgument("template size mismatch");
  }
  const std::size_t n = std::size_t(height) * width;
  if (!keep.empty() && keep.size() != n) throw InvalidArgument("template mask size mismatch");
  auto kept = [&](int i, int j) { return keep.empty() || keep[std::size_t(j) * width + i] != 0; };

  // Normal equations of the plane fit over the kept cells.
  std::array<std::array<double, 3>, 3> gram{};
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      if (!kept(i, j)) continue;
      const double basis[3] = {1.0, i - 0.5 * (width - 1), j - 0.5 * (height - 1)};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) gram[a][b] += basis[a] * basis[b];
    }
  }
  auto solve = [&](std::array<double, 3> rhs) {
    auto g = gram;
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::abs(g[r][col]) > std::abs(g[piv][col])) piv = r;
      if (std::abs(g[piv][col]) < 1e-9) throw InvalidArgument("template too small to detrend");
      std::swap(g[col], g[piv]);
      std::swap(rhs[col], rhs[piv]);
      for (int r = 0; r < 3; ++r) {
        if (r == col) continue;
        const double f = g[r][col] / g[col][col];
        for (int k = col; k < 3; ++k) g[r][k] -= f * g[col][k];
        rhs[r] -= f * rhs[col];
      }
    }
    return std::array<double, 3>{rhs[0] / g[0][0], rhs[1] / g[1][1], rhs[2] / g[2][2]};
  };

  CellTemplate tpl;
  tpl.height = height;
  tpl.width = width;
  tpl.weights.assign(raw.size(), 0.0f);
  double norm2 = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double* t = raw.data() + c * n;
    std::array<double, 3> rhs{};
    for (int j = 0; j < height; ++j) {
      for (int i = 0; i < width; ++i) {
        if (!kept(i, j)) continue;
        const double v = t[j * width + i];
        rhs[0] += v;
        rhs[1] += v * (i - 0.5 * (width - 1));
        rhs[2] += v * (j - 0.5 * (height - 1));
      }
    }
    const auto coef = solve(rhs);
    for (int j = 0; j < height; ++j) {
      for (int i = 0; i < width; ++i) {
        if (!kept(i, j)) continue;
        const double v = t[j * width + i] - coef[0] - coef[1] * (i - 0.5 * (width - 1)) -
                         coef[2] * (j - 0.5 * (height - 1));
        const float f = static_cast<float>(v);
        tpl.weights[c * n + j * width + i] = f;
        norm2 += double(f) * f;
      }
    }
  }
  tpl.norm = std::sqrt(norm2);
  return tpl;
}

std::vector<std::vector<float>> match_score_maps(const FeatureMap& cells,
                                                 std::span<const CellTemplate> templates) {
  for (const auto& tpl : templates) check_match_args(cells, tpl);
  // Planes followed by a lane of zeros: padded rows may read past the last
  // element, and those outputs are discarded.
  std::vector<float> padded(cells.data.size() + kLanes, 0.0f);
  std::copy(cells.data.begin(), cells.data.end(), padded.begin());
  std::vector<std::vector<float>> maps;
  maps.reserve(templates.size());
  for (const auto& tpl : templates) maps.push_back(score_one(cells, padded, tpl));
  return maps;
}

std::vector<float> match_score_map(const FeatureMap& cells, const CellTemplate& tpl) {
  return std::move(match_score_maps(cells, std::span<const CellTemplate>(&tpl, 1)).front());
}

std::vector<float> match_score_map_reference(const FeatureMap& cells, const CellTemplate& tpl) {
  check_match_args(cells, tpl);
  const int W = cells.width;
  const int th = tpl.height;
  const int tw = tpl.width;
  const int out_w = W - tw + 1;
  const int out_h = cells.height - th + 1;
  if (out_w <= 0 || out_h <= 0) return {};
  const double energy = tpl.norm * tpl.norm;
  std::vector<float> out(std::size_t(out_w) * out_h, 0.0f);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double num = 0.0;
      for (int c = 0; c < 3; ++c) {
        const float* plane = cells.plane(c);
        const float* t = tpl.weights.data() + std::size_t(c) * th * tw;
        for (int j = 0; j < th; ++j)
          for (int i = 0; i < tw; ++i) num += double(t[j * tw + i]) * plane[std::size_t(y + j) * W + x + i];
      }
      out[std::size_t(y) * out_w + x] = static_cast<float>(num / energy);
    }
  }
  return out;
}

}  // namespace lp::kernels
