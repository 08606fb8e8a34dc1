#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latentpatch/core/image.hpp"
#include "latentpatch/core/latent.hpp"
#include "latentpatch/http.hpp"

namespace lp {

enum class GeneratorKind { toy, external, identity };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::toy;
  std::size_t latent_dim = 32;
  int out_width = 64;
  int out_height = 64;
  std::uint64_t seed = 0;        // toy only
  std::string endpoint;          // external only
  std::optional<int> class_id;   // forwarded to external generators
  HttpOptions http;

  // Throws InvalidArgument when the spec breaks an invariant.
  void validate() const;
};

// Latent vector -> RGB patch. Implementations are pure and thread-safe.
class Generator {
 public:
  explicit Generator(GeneratorSpec spec);
  virtual ~Generator() = default;

  ImageBuffer generate(const LatentVector& z) const;
  // Elementwise equal to calling generate() on each latent.
  std::vector<ImageBuffer> generate_batch(std::span<const LatentVector> zs) const;

  const GeneratorSpec& spec() const { return spec_; }
  std::uint64_t queries() const { return queries_.load(); }

 protected:
  virtual ImageBuffer run(std::span<const double> z) const = 0;

 private:
  GeneratorSpec spec_;
  mutable std::atomic<std::uint64_t> queries_{0};
};

std::unique_ptr<Generator> make_generator(const GeneratorSpec& spec);

// Identity map used by the pixel-space baselines: z holds the patch's
// interleaved RGB values, clamped to [0,1].
GeneratorSpec identity_generator_spec(int width, int height);

}  // namespace lp
