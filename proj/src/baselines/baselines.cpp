#include "latentpatch/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "latentpatch/core/error.hpp"
#include "latentpatch/optimizer/patch_objective.hpp"

namespace lp {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::pixel_rs: return "pixel_rs";
    case BaselineKind::latent_rs: return "latent_rs";
    case BaselineKind::square: return "square";
    case BaselineKind::pixel_nes: return "pixel_nes";
  }
  return "?";
}

std::optional<BaselineKind> parse_baseline(const std::string& name) {
  for (auto k : {BaselineKind::pixel_rs, BaselineKind::latent_rs, BaselineKind::square, BaselineKind::pixel_nes}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void BaselineSpec::validate() const {
  if (budget < 1) throw InvalidArgument("baseline budget must be >= 1");
  if (patch_width < 2 || patch_height < 2) throw InvalidArgument("baseline patch must be at least 2x2");
  if (!(block_fraction > 0.0 && block_fraction <= 1.0)) throw InvalidArgument("block_fraction must lie in (0, 1]");
  if (!std::is_sorted(block_schedule.begin(), block_schedule.end())) {
    throw InvalidArgument("block_schedule must be ascending");
  }
  if (!(latent_sigma > 0.0)) throw InvalidArgument("latent_sigma must be > 0");
  if (nes_population < 2) throw InvalidArgument("nes_population must be >= 2");
  if (!(nes_sigma > 0.0) || !(nes_lr > 0.0)) throw InvalidArgument("nes_sigma and nes_lr must be > 0");
}

int BaselineSpec::block_side(std::uint64_t k, std::uint64_t total) const {
  double p = block_fraction;
  for (double f : block_schedule) {
    if (double(k) >= f * double(total)) p *= 0.5;
  }
  const int side = static_cast<int>(std::lround(std::sqrt(p * patch_width * patch_height)));
  return std::clamp(side, 1, std::min(patch_width, patch_height));
}

std::uint64_t rs_evaluations(std::uint64_t budget, std::size_t batch) {
  const std::uint64_t b = std::max<std::size_t>(batch, 1);
  const std::uint64_t passes = budget / b;
  return passes > 1 ? passes - 1 : 1;
}

int es_iterations(std::uint64_t budget, std::size_t batch, int population) {
  const std::uint64_t passes = budget / std::max<std::size_t>(batch, 1);
  if (passes < 1) return 0;
  return static_cast<int>((passes - 1) / std::uint64_t(population + 1));
}

ImageBuffer stripe_init(int width, int height, std::uint64_t seed) {
  Rng rng(seed, stream_id(0x57e1, 0, 0));
  ImageBuffer img(width, height);
  for (int x = 0; x < width; ++x) {
    float col[3];
    for (float& c : col) c = rng.below(2) ? 1.0f : 0.0f;
    for (int y = 0; y < height; ++y)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
  }
  return img;
}

namespace {

LatentVector flatten(const ImageBuffer& img) {
  return LatentVector(std::vector<double>(img.data().begin(), img.data().end()));
}

ImageBuffer unflatten(const LatentVector& z, int w, int h) {
  std::vector<float> v(z.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(std::clamp(z.values[i], 0.0, 1.0));
  return ImageBuffer(w, h, std::move(v));
}

struct Setup {
  std::unique_ptr<Generator> identity;
  std::unique_ptr<PatchObjective> objective;
  QueryLedger start;
};

Setup make_setup(const BaselineContext& ctx, const BaselineSpec& spec, bool pixel) {
  if (ctx.detector == nullptr) throw InvalidArgument("baseline needs a detector");
  if (ctx.scenes.empty()) throw InvalidArgument("baseline needs at least one scene");
  spec.validate();
  Setup s;
  const Generator* gen = ctx.generator;
  LossOracles oracles{ctx.detector, ctx.classifier};
  LossWeights weights = ctx.weights;
  if (pixel) {
    s.identity = make_generator(identity_generator_spec(spec.patch_width, spec.patch_height));
    gen = s.identity.get();
    oracles.classifier = nullptr;
    weights.lambda_cls = 0.0;
  }
  if (gen == nullptr) throw InvalidArgument("latent baseline needs a generator");
  const std::uint64_t before = ctx.detector->queries();
  auto scenes = prepare_scenes(ctx.scenes, *ctx.detector);
  s.objective = std::make_unique<PatchObjective>(*gen, oracles, std::move(scenes), ctx.transform, weights,
                                                 ctx.transform_seed);
  s.start = s.objective->queries();
  s.start.detector_queries -= ctx.detector->queries() - before;  // count the placement pass
  return s;
}

// Shared accept-if-better loop. propose(k, current) returns the next
// candidate latent; scale(k) is logged in the lr column.
template <class Propose, class Scale>
BaselineResult random_search(const Setup& s, const BaselineSpec& spec, LatentVector current, Propose propose,
                             Scale scale) {
  const std::uint64_t total = rs_evaluations(spec.budget, s.objective->scenes().size());
  BaselineResult r;
  r.dim = current.dim();
  LossBreakdown best = s.objective->evaluate(current, {0, 0});
  r.steps.push_back({best, true});
  r.history.push_back({best, scale(0), best.total, s.objective->queries() - s.start});
  for (std::uint64_t k = 1; k < total; ++k) {
    LatentVector cand = propose(k, current);
    const LossBreakdown l = s.objective->evaluate(cand, {static_cast<int>(k), 0});
    if (!std::isfinite(l.total)) throw InvalidFitness("non-finite loss in random search");
    const bool accept = l.total < best.total;
    if (accept) {
      best = l;
      current = std::move(cand);
    }
    r.steps.push_back({l, accept});
    r.history.push_back({l, scale(k), best.total, s.objective->queries() - s.start});
  }
  r.best_loss = best.total;
  r.ledger = s.objective->queries() - s.start;
  r.z = std::move(current);
  return r;
}

}  // namespace

BaselineResult run_pixel_rs(const BaselineContext& ctx, const BaselineSpec& spec) {
  Setup s = make_setup(ctx, spec, true);
  const int w = spec.patch_width, h = spec.patch_height;
  const std::uint64_t total = rs_evaluations(spec.budget, ctx.scenes.size());
  auto propose = [&](std::uint64_t k, const LatentVector& cur) {
    Rng rng(spec.seed, stream_id(0x9e15, k, 0));
    const int side = spec.block_side(k, total);
    const int x0 = static_cast<int>(rng.below(std::uint64_t(w - side + 1)));
    const int y0 = static_cast<int>(rng.below(std::uint64_t(h - side + 1)));
    double color[3];
    for (double& c : color) c = rng.uniform();
    LatentVector next = cur;
    for (int y = y0; y < y0 + side; ++y)
      for (int x = x0; x < x0 + side; ++x)
        for (int c = 0; c < 3; ++c) next.values[(std::size_t(y) * w + x) * 3 + c] = color[c];
    return next;
  };
  auto scale = [&](std::uint64_t k) { return double(spec.block_side(k, total)) / w; };
  BaselineResult r = random_search(s, spec, flatten(ImageBuffer(w, h, 0.5f)), propose, scale);
  r.patch = unflatten(*r.z, w, h);
  r.z.reset();
  return r;
}

BaselineResult run_square(const BaselineContext& ctx, const BaselineSpec& spec) {
  Setup s = make_setup(ctx, spec, true);
  const int w = spec.patch_width, h = spec.patch_height;
  const std::uint64_t total = rs_evaluations(spec.budget, ctx.scenes.size());
  auto propose = [&](std::uint64_t k, const LatentVector& cur) {
    Rng rng(spec.seed, stream_id(0x5a0a, k, 0));
    const int side = spec.block_side(k, total);
    const int x0 = static_cast<int>(rng.below(std::uint64_t(w - side + 1)));
    const int y0 = static_cast<int>(rng.below(std::uint64_t(h - side + 1)));
    double delta[3];
    for (double& d : delta) d = rng.below(2) ? 1.0 : -1.0;
    LatentVector next = cur;
    for (int y = y0; y < y0 + side; ++y) {
      for (int x = x0; x < x0 + side; ++x) {
        for (int c = 0; c < 3; ++c) {
          double& v = next.values[(std::size_t(y) * w + x) * 3 + c];
          v = std::clamp(v + delta[c], 0.0, 1.0);
        }
      }
    }
    return next;
  };
  auto scale = [&](std::uint64_t k) { return double(spec.block_side(k, total)) / w; };
  BaselineResult r = random_search(s, spec, flatten(stripe_init(w, h, spec.seed)), propose, scale);
  r.patch = unflatten(*r.z, w, h);
  r.z.reset();
  return r;
}

BaselineResult run_latent_rs(const BaselineContext& ctx, const BaselineSpec& spec, double tau) {
  Setup s = make_setup(ctx, spec, false);
  EsConfig init_cfg;
  init_cfg.seed = spec.seed;
  init_cfg.tau = tau;
  const std::size_t d = ctx.generator->spec().latent_dim;
  auto propose = [&](std::uint64_t k, const LatentVector& cur) {
    Rng rng(spec.seed, stream_id(0x1a75, k, 0));
    LatentVector next = cur;
    for (double& v : next.values) v += spec.latent_sigma * rng.normal();
    return project_latent(std::move(next), tau);
  };
  auto scale = [&](std::uint64_t) { return spec.latent_sigma; };
  BaselineResult r = random_search(s, spec, project_latent(gaussian_start(init_cfg, d), tau), propose, scale);
  r.patch = ctx.generator->generate(*r.z);
  return r;
}

BaselineResult run_pixel_nes(const BaselineContext& ctx, const BaselineSpec& spec) {
  Setup s = make_setup(ctx, spec, true);
  EsConfig cfg;
  cfg.population = spec.nes_population;
  cfg.sigma = spec.nes_sigma;
  cfg.lr = spec.nes_lr;
  cfg.lr_min = std::min(cfg.lr_min, cfg.lr);
  cfg.seed = spec.seed;
  cfg.box_lo = 0.0;
  cfg.box_hi = 1.0;
  cfg.max_iters = es_iterations(spec.budget, ctx.scenes.size(), cfg.population);
  AttackState state = initial_state(cfg, flatten(ImageBuffer(spec.patch_width, spec.patch_height, 0.5f)));
  state.ledger = s.objective->queries() - s.start;
  run_attack(*s.objective, cfg, state);
  BaselineResult r;
  r.dim = state.z.dim();
  r.history = state.history;
  r.ledger = state.ledger;
  r.best_loss = state.best_loss;
  r.patch = unflatten(state.best_z, spec.patch_width, spec.patch_height);
  return r;
}

BaselineResult run_baseline(const BaselineContext& ctx, const BaselineSpec& spec) {
  switch (spec.kind) {
    case BaselineKind::pixel_rs: return run_pixel_rs(ctx, spec);
    case BaselineKind::latent_rs: return run_latent_rs(ctx, spec);
    case BaselineKind::square: return run_square(ctx, spec);
    case BaselineKind::pixel_nes: return run_pixel_nes(ctx, spec);
  }
  throw InvalidArgument("unknown baseline");
}

}  // namespace lp
