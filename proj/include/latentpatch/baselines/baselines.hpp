#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latentpatch/generator/generator.hpp"
#include "latentpatch/losses/losses.hpp"
#include "latentpatch/optimizer/es.hpp"
#include "latentpatch/transformer/transformer.hpp"

namespace lp {

enum class BaselineKind { pixel_rs, latent_rs, square, pixel_nes };

std::string to_string(BaselineKind kind);
std::optional<BaselineKind> parse_baseline(const std::string& name);

struct BaselineSpec {
  BaselineKind kind = BaselineKind::pixel_rs;
  std::uint64_t budget = 50000;  // detector queries, placement pass included
  std::uint64_t seed = 0;
  int patch_width = 64;          // pixel methods
  int patch_height = 64;
  // Block area as a fraction of the patch, halved at each schedule point
  // (fractions of the proposal budget). Shared by pixel_rs and square.
  double block_fraction = 0.1;
  std::vector<double> block_schedule = {0.001, 0.005, 0.02, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8};
  double latent_sigma = 0.5;     // latent_rs proposal scale
  int nes_population = 70;
  double nes_sigma = 0.05;
  double nes_lr = 0.02;

  void validate() const;
  // Block side for proposal k of total (k counted from 0).
  int block_side(std::uint64_t k, std::uint64_t total) const;
};

struct BaselineStep {
  LossBreakdown loss;
  bool accepted = false;
};

struct BaselineResult {
  ImageBuffer patch;
  std::optional<LatentVector> z;  // latent methods
  std::vector<BaselineStep> steps;  // one per evaluated proposal (random search)
  std::vector<EpochRecord> history; // same shape as the main attack's metrics
  QueryLedger ledger;
  double best_loss = 0.0;
  std::size_t dim = 0;
};

struct BaselineContext {
  const Detector* detector = nullptr;
  const Classifier* classifier = nullptr;  // latent_rs only; pixel methods run with lambda_cls = 0
  const Generator* generator = nullptr;    // latent_rs only
  std::vector<ImageBuffer> scenes;
  TransformConfig transform;
  LossWeights weights;
  std::uint64_t transform_seed = 0;
};

// Number of proposals random search can afford: floor(budget / |B|) - 1
// after the placement pass, at least 1.
std::uint64_t rs_evaluations(std::uint64_t budget, std::size_t batch);
// ES iterations affordable at population n with one extra evaluation per
// iteration for the iterate itself.
int es_iterations(std::uint64_t budget, std::size_t batch, int population);

BaselineResult run_pixel_rs(const BaselineContext& ctx, const BaselineSpec& spec);
BaselineResult run_latent_rs(const BaselineContext& ctx, const BaselineSpec& spec, double tau = 20.0);
BaselineResult run_square(const BaselineContext& ctx, const BaselineSpec& spec);
BaselineResult run_pixel_nes(const BaselineContext& ctx, const BaselineSpec& spec);

BaselineResult run_baseline(const BaselineContext& ctx, const BaselineSpec& spec);

// Vertical stripes, one random {0,1} color per column.
ImageBuffer stripe_init(int width, int height, std::uint64_t seed);

}  // namespace lp
