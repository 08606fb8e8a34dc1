#include "latentpatch/optimizer/patch_objective.hpp"

#include "latentpatch/core/error.hpp"

namespace lp {

PatchObjective::PatchObjective(const Generator& generator, LossOracles oracles, std::vector<PlacementScene> scenes,
                               TransformConfig transform, LossWeights weights, std::uint64_t seed)
    : generator_(generator),
      oracles_(oracles),
      scenes_(std::move(scenes)),
      transform_(transform),
      weights_(weights),
      seed_(seed) {
  if (oracles_.detector == nullptr) throw InvalidArgument("PatchObjective needs a detector");
  if (scenes_.empty()) throw InvalidArgument("PatchObjective needs at least one scene");
  transform_.validate();
  weights_.validate();
}

std::vector<TransformParams> PatchObjective::transforms(EvalPoint at) const {
  std::vector<TransformParams> params;
  params.reserve(scenes_.size());
  for (std::size_t s = 0; s < scenes_.size(); ++s) {
    Rng rng(mix64(seed_ ^ 0x7f4a7c15ULL),
            stream_id(std::uint64_t(at.iteration), std::uint64_t(at.member), std::uint64_t(s)));
    params.push_back(sample_transform(transform_, rng));
  }
  return params;
}

LossBreakdown PatchObjective::evaluate(const LatentVector& z, EvalPoint at) const {
  const ImageBuffer patch = generator_.generate(z);
  return total_loss(scenes_, patch, weights_, oracles_, transform_, transforms(at));
}

QueryLedger PatchObjective::queries() const {
  return {oracles_.detector->queries(), oracles_.classifier ? oracles_.classifier->queries() : 0,
          generator_.queries()};
}

}  // namespace lp
