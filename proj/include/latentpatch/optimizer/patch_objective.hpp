#pragma once

#include <cstdint>
#include <vector>

#include "latentpatch/generator/generator.hpp"
#include "latentpatch/losses/losses.hpp"
#include "latentpatch/optimizer/es.hpp"
#include "latentpatch/transformer/transformer.hpp"

namespace lp {

// The attack fitness: generate the patch, draw one transform per scene from
// stream (iteration, member, scene), and return total_loss over the batch.
// Costs |scenes| detector queries, one generator query and, with a
// classifier, one classifier query per evaluation.
class PatchObjective : public Objective {
 public:
  PatchObjective(const Generator& generator, LossOracles oracles, std::vector<PlacementScene> scenes,
                 TransformConfig transform, LossWeights weights, std::uint64_t seed);

  std::size_t dim() const override { return generator_.spec().latent_dim; }
  LossBreakdown evaluate(const LatentVector& z, EvalPoint at) const override;
  QueryLedger queries() const override;

  std::vector<TransformParams> transforms(EvalPoint at) const;
  const std::vector<PlacementScene>& scenes() const { return scenes_; }

 private:
  const Generator& generator_;
  LossOracles oracles_;
  std::vector<PlacementScene> scenes_;
  TransformConfig transform_;
  LossWeights weights_;
  std::uint64_t seed_;
};

}  // namespace lp
