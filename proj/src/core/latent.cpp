#include "latentpatch/core/latent.hpp"

#include <algorithm>
#include <cmath>

#include "latentpatch/core/error.hpp"

namespace lp {

bool LatentVector::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double LatentVector::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

std::vector<LatentVector> sample_gaussian(Rng& rng, std::size_t n, std::size_t d) {
  if (n == 0 || d == 0) throw InvalidArgument("sample_gaussian requires n >= 1 and d >= 1");
  std::vector<LatentVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LatentVector v(d);
    for (double& x : v.values) x = rng.normal();
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace lp
