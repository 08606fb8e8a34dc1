#include <doctest.h>

#include <atomic>
#include <cmath>

#include "latentpatch/baselines/baselines.hpp"
#include "latentpatch/core/error.hpp"
#include "latentpatch/oracles/oracles.hpp"
#include "latentpatch/scenes/scenes.hpp"

using namespace lp;

namespace {

// Delegates to the toy generator and records the largest |z_i| it was asked for.
class RecordingGenerator : public Generator {
 public:
  explicit RecordingGenerator(GeneratorSpec spec) : Generator(spec), inner_(make_generator(spec)) {}
  double max_seen() const { return max_seen_.load(); }

 protected:
  ImageBuffer run(std::span<const double> z) const override {
    LatentVector v(std::vector<double>(z.begin(), z.end()));
    double cur = max_seen_.load();
    const double m = v.max_abs();
    while (m > cur && !max_seen_.compare_exchange_weak(cur, m)) {
    }
    return inner_->generate(v);
  }

 private:
  std::unique_ptr<Generator> inner_;
  mutable std::atomic<double> max_seen_{0.0};
};

struct Stack {
  std::unique_ptr<Detector> det = make_detector(DetectorSpec{});
  std::unique_ptr<Classifier> cls = make_classifier(ClassifierSpec{});
  std::unique_ptr<Generator> gen = make_generator(GeneratorSpec{});

  BaselineContext ctx(int scenes = 2) const {
    CorpusSpec cs;
    cs.count = scenes;
    cs.seed = 41;
    BaselineContext c;
    c.detector = det.get();
    c.classifier = cls.get();
    c.generator = gen.get();
    for (auto& s : generate_corpus(cs)) c.scenes.push_back(s.image);
    c.weights = LossWeights{0.1, 0.1};
    c.transform_seed = 5;
    return c;
  }
};

BaselineSpec spec_for(BaselineKind kind, std::uint64_t budget) {
  BaselineSpec s;
  s.kind = kind;
  s.budget = budget;
  s.seed = 9;
  return s;
}

}  // namespace

TEST_CASE("budget arithmetic") {
  CHECK(rs_evaluations(100, 4) == 24);
  CHECK(rs_evaluations(8, 4) == 1);
  CHECK(rs_evaluations(3, 4) == 1);
  CHECK(rs_evaluations(10, 0) == 9);
  for (int n : {10, 50, 70}) {
    for (int t : {0, 1, 7, 149}) {
      const std::uint64_t b = 8;
      const std::uint64_t budget = b * (1 + std::uint64_t(t) * (n + 1));
      CHECK(es_iterations(budget, b, n) == t);
      CHECK(es_iterations(budget + b * n, b, n) == t);
    }
  }
  CHECK(es_iterations(3, 8, 70) == 0);
}

TEST_CASE("block side follows the halving schedule") {
  BaselineSpec s;
  s.patch_width = s.patch_height = 64;
  const std::uint64_t total = 1000;
  for (std::uint64_t k = 0; k < total; ++k) {
    int halvings = 0;
    for (double f : s.block_schedule) halvings += double(k) >= f * double(total);
    const double area = s.block_fraction * std::pow(0.5, halvings) * 64 * 64;
    const int expected = std::max(1, int(std::lround(std::sqrt(area))));
    REQUIRE(s.block_side(k, total) == expected);
  }
  CHECK(s.block_side(0, total) == 20);
  CHECK(s.block_side(999, total) == 1);
  s.block_fraction = 1.0;
  s.block_schedule.clear();
  CHECK(s.block_side(0, 10) == 64);
}

TEST_CASE("stripe init has one binary color per column") {
  auto img = stripe_init(17, 9, 3);
  for (int x = 0; x < 17; ++x) {
    for (int c = 0; c < 3; ++c) {
      const float v = img.at(x, 0, c);
      CHECK((v == 0.0f || v == 1.0f));
      for (int y = 1; y < 9; ++y) CHECK(img.at(x, y, c) == v);
    }
  }
  CHECK(stripe_init(17, 9, 3) == img);
  CHECK_FALSE(stripe_init(17, 9, 4) == img);
}

TEST_CASE("random search with budget for one proposal") {
  Stack st;
  auto ctx = st.ctx(2);
  auto r = run_baseline(ctx, spec_for(BaselineKind::pixel_rs, 3));
  CHECK(r.steps.size() == 1);
  CHECK(r.steps[0].accepted);
  CHECK(r.ledger.detector_queries == 4);  // placement pass + one evaluation
}

TEST_CASE("random search accepts strictly decreasing losses within the budget") {
  Stack st;
  auto ctx = st.ctx(2);
  for (auto kind : {BaselineKind::pixel_rs, BaselineKind::square, BaselineKind::latent_rs}) {
    CAPTURE(to_string(kind));
    const std::uint64_t budget = 61;
    auto r = run_baseline(ctx, spec_for(kind, budget));
    CHECK(r.steps.size() == rs_evaluations(budget, 2));
    CHECK(r.ledger.detector_queries == 60);
    CHECK(r.ledger.detector_queries <= budget);
    CHECK(r.history.size() == r.steps.size());
    double last = INFINITY;
    for (const auto& s : r.steps) {
      if (!s.accepted) {
        CHECK(s.loss.total >= last);
        continue;
      }
      CHECK(s.loss.total < last);
      last = s.loss.total;
    }
    CHECK(r.best_loss == last);
    CHECK(r.history.back().best_loss == last);
    if (kind == BaselineKind::latent_rs) {
      CHECK(r.z.has_value());
      CHECK(r.ledger.classifier_queries > 0);
    } else {
      CHECK(r.ledger.classifier_queries == 0);
      CHECK(r.patch.width() == 64);
    }
    if (kind == BaselineKind::square)
      for (float v : r.patch.data()) CHECK((v == 0.0f || v == 1.0f));

    auto again = run_baseline(ctx, spec_for(kind, budget));
    CHECK(again.patch == r.patch);
  }
}

TEST_CASE("latent random search only queries inside the box") {
  Stack st;
  RecordingGenerator rec(GeneratorSpec{});
  auto ctx = st.ctx(1);
  ctx.generator = &rec;
  auto spec = spec_for(BaselineKind::latent_rs, 40);
  spec.latent_sigma = 3.0;
  const double tau = 1.5;
  auto r = run_latent_rs(ctx, spec, tau);
  CHECK(rec.max_seen() <= tau);
  CHECK(rec.max_seen() == tau);  // sigma >> tau saturates the box
  CHECK(r.z->max_abs() <= tau);
  CHECK(rec.queries() == r.steps.size() + 1);  // plus rendering the final patch
}

TEST_CASE("pixel NES runs in pixel space at every ablation population") {
  Stack st;
  auto ctx = st.ctx(1);
  for (int n : {50, 70, 90, 110}) {
    auto spec = spec_for(BaselineKind::pixel_nes, 1 + 2 * (n + 1));
    spec.nes_population = n;
    auto r = run_baseline(ctx, spec);
    CHECK(r.dim == 64u * 64u * 3u);
    CHECK(r.history.size() == 2);
    CHECK(r.ledger.detector_queries == spec.budget);
    for (float v : r.patch.data()) CHECK((v >= 0.0f && v <= 1.0f));
  }
}

TEST_CASE("baseline ledger equals the latent attack's query count") {
  Stack st;
  auto ctx = st.ctx(2);
  const int n = 10, t = 3;
  const std::uint64_t ours = 2 * (1 + std::uint64_t(t) * (n + 1));
  for (auto kind : {BaselineKind::pixel_rs, BaselineKind::latent_rs, BaselineKind::square}) {
    auto r = run_baseline(ctx, spec_for(kind, ours));
    CHECK(r.ledger.detector_queries == ours);
  }
  auto spec = spec_for(BaselineKind::pixel_nes, ours);
  spec.nes_population = n;
  CHECK(run_baseline(ctx, spec).ledger.detector_queries == ours);
}

TEST_CASE("baseline argument errors") {
  Stack st;
  auto ctx = st.ctx(1);
  auto spec = spec_for(BaselineKind::pixel_rs, 0);
  CHECK_THROWS_AS(run_baseline(ctx, spec), InvalidArgument);
  spec.budget = 10;
  spec.block_fraction = 0.0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec = spec_for(BaselineKind::pixel_rs, 10);
  spec.block_schedule = {0.5, 0.1};
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  BaselineContext empty = ctx;
  empty.scenes.clear();
  CHECK_THROWS_AS(run_baseline(empty, spec), InvalidArgument);
  BaselineContext nogen = ctx;
  nogen.generator = nullptr;
  CHECK_THROWS_AS(run_baseline(nogen, spec_for(BaselineKind::latent_rs, 10)), InvalidArgument);
  CHECK(parse_baseline("square") == BaselineKind::square);
  CHECK_FALSE(parse_baseline("bogus").has_value());
}
