#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latentpatch/core/rng.hpp"

namespace lp {

struct LatentVector {
  std::vector<double> values;

  LatentVector() = default;
  explicit LatentVector(std::size_t dim, double fill = 0.0) : values(dim, fill) {}
  explicit LatentVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t dim() const { return values.size(); }
  std::span<const double> span() const { return values; }
  bool all_finite() const;
  double max_abs() const;
  bool operator==(const LatentVector&) const = default;
};

// n i.i.d. standard-normal vectors of dimension d drawn from rng.
std::vector<LatentVector> sample_gaussian(Rng& rng, std::size_t n, std::size_t d);

}  // namespace lp
