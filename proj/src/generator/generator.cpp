#include "latentpatch/generator/generator.hpp"

#include <cmath>
#include <string>

#include "latentpatch/core/error.hpp"
#include "latentpatch/generator/toy_generator.hpp"

namespace lp {

void GeneratorSpec::validate() const {
  if (latent_dim < 1) throw InvalidArgument("generator latent_dim must be >= 1");
  if (out_width < 8 || out_height < 8) throw InvalidArgument("generator output must be at least 8x8");
  if (kind == GeneratorKind::external && endpoint.empty()) {
    throw InvalidArgument("external generator requires an endpoint");
  }
  if (kind == GeneratorKind::identity &&
      latent_dim != std::size_t(3) * out_width * out_height) {
    throw InvalidArgument("identity generator latent_dim must equal 3*W*H");
  }
}

Generator::Generator(GeneratorSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

ImageBuffer Generator::generate(const LatentVector& z) const {
  if (z.dim() != spec_.latent_dim) {
    throw InvalidArgument("latent dimension " + std::to_string(z.dim()) +
                          " does not match generator dimension " +
                          std::to_string(spec_.latent_dim));
  }
  if (!z.all_finite()) throw InvalidData("latent vector has non-finite entries");
  ImageBuffer patch = run(z.values);
  queries_.fetch_add(1);
  return patch;
}

std::vector<ImageBuffer> Generator::generate_batch(std::span<const LatentVector> zs) const {
  std::vector<ImageBuffer> out(zs.size());
  const long n = static_cast<long>(zs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = generate(zs[i]);
    } catch (...) {
#pragma omp critical(lp_generate_batch)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::unique_ptr<Generator> make_generator(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorKind::toy:
      return std::make_unique<ToyGenerator>(spec);
    case GeneratorKind::external:
      return std::make_unique<HttpGenerator>(spec);
    case GeneratorKind::identity:
      return std::make_unique<IdentityGenerator>(spec);
  }
  throw InvalidArgument("unknown generator kind");
}

GeneratorSpec identity_generator_spec(int width, int height) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::identity;
  spec.out_width = width;
  spec.out_height = height;
  spec.latent_dim = std::size_t(3) * width * height;
  return spec;
}

}  // namespace lp
