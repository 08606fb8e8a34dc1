#include <complex>
#include <mutex>

#include <fftw3.h>

#include "latentpatch/core/error.hpp"
#include "latentpatch/kernels.hpp"

namespace lp::kernels {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct FftwBuffer {
  T* ptr = nullptr;
  explicit FftwBuffer(std::size_t n) : ptr(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (ptr == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

}  // namespace

struct FftMatcher::Impl {
  int h = 0, w = 0, wc = 0;
  std::vector<int> th, tw;
  // Per template, per channel: conj(T) / (h w |t|^2), h x wc.
  std::vector<std::vector<std::complex<double>>> spectra;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

FftMatcher::FftMatcher(int height, int width, std::span<const CellTemplate> templates)
    : impl_(std::make_unique<Impl>()) {
  if (height < 1 || width < 1) throw InvalidArgument("FftMatcher: empty grid");
  Impl& m = *impl_;
  m.h = height;
  m.w = width;
  m.wc = width / 2 + 1;
  const std::size_t nr = std::size_t(height) * width;
  const std::size_t nc = std::size_t(height) * m.wc;
  FftwBuffer<double> real(nr);
  FftwBuffer<fftw_complex> spec(nc);
  {
    std::lock_guard lock(planner_mutex());
    m.forward = fftw_plan_dft_r2c_2d(height, width, real.ptr, spec.ptr, FFTW_ESTIMATE);
    m.inverse = fftw_plan_dft_c2r_2d(height, width, spec.ptr, real.ptr, FFTW_ESTIMATE);
  }
  if (!m.forward || !m.inverse) throw InvalidArgument("FftMatcher: FFTW planning failed");

  for (const auto& tpl : templates) {
    if (tpl.height > height || tpl.width > width) throw InvalidArgument("FftMatcher: template larger than grid");
    if (!(tpl.norm > 0.0)) throw InvalidArgument("match: template has no energy");
    m.th.push_back(tpl.height);
    m.tw.push_back(tpl.width);
    const double scale = 1.0 / (double(nr) * tpl.norm * tpl.norm);
    for (int c = 0; c < 3; ++c) {
      std::fill(real.ptr, real.ptr + nr, 0.0);
      const float* t = tpl.weights.data() + std::size_t(c) * tpl.height * tpl.width;
      for (int i = 0; i < tpl.height; ++i)
        for (int j = 0; j < tpl.width; ++j) real.ptr[std::size_t(i) * width + j] = t[i * tpl.width + j];
      fftw_execute_dft_r2c(m.forward, real.ptr, spec.ptr);
      std::vector<std::complex<double>> s(nc);
      for (std::size_t k = 0; k < nc; ++k) s[k] = std::conj(std::complex<double>(spec.ptr[k][0], spec.ptr[k][1])) * scale;
      m.spectra.push_back(std::move(s));
    }
  }
}

FftMatcher::~FftMatcher() = default;

std::vector<std::vector<float>> FftMatcher::score_maps(const FeatureMap& cells) const {
  const Impl& m = *impl_;
  if (cells.channels != 3 || cells.height != m.h || cells.width != m.w) {
    throw InvalidArgument("FftMatcher: cell grid does not match the plan");
  }
  const std::size_t nr = std::size_t(m.h) * m.w;
  const std::size_t nc = std::size_t(m.h) * m.wc;
  FftwBuffer<double> real(nr);
  FftwBuffer<fftw_complex> acc(nc);
  std::vector<std::complex<double>> planes(3 * nc);
  for (int c = 0; c < 3; ++c) {
    const float* p = cells.plane(c);
    for (std::size_t i = 0; i < nr; ++i) real.ptr[i] = p[i];
    fftw_execute_dft_r2c(m.forward, real.ptr, acc.ptr);
    for (std::size_t k = 0; k < nc; ++k) planes[c * nc + k] = {acc.ptr[k][0], acc.ptr[k][1]};
  }

  std::vector<std::vector<float>> maps;
  for (std::size_t t = 0; t < m.th.size(); ++t) {
    const auto* s0 = m.spectra[3 * t].data();
    const auto* s1 = m.spectra[3 * t + 1].data();
    const auto* s2 = m.spectra[3 * t + 2].data();
    for (std::size_t k = 0; k < nc; ++k) {
      const std::complex<double> v = planes[k] * s0[k] + planes[nc + k] * s1[k] + planes[2 * nc + k] * s2[k];
      acc.ptr[k][0] = v.real();
      acc.ptr[k][1] = v.imag();
    }
    fftw_execute_dft_c2r(m.inverse, acc.ptr, real.ptr);
    const int out_w = m.w - m.tw[t] + 1;
    const int out_h = m.h - m.th[t] + 1;
    std::vector<float> out(std::size_t(out_w) * out_h);
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) out[std::size_t(y) * out_w + x] = static_cast<float>(real.ptr[std::size_t(y) * m.w + x]);
    maps.push_back(std::move(out));
  }
  return maps;
}

}  // namespace lp::kernels
