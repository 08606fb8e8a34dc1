#include <doctest.h>

#include <atomic>
#include <fstream>
#include <cmath>
#include <limits>

#include "latentpatch/core/error.hpp"
#include "latentpatch/core/parallel.hpp"
#include "latentpatch/core/rng.hpp"
#include "latentpatch/optimizer/es.hpp"
#include "support/reference.hpp"

using namespace lp;

namespace {

std::vector<LatentVector> offsets(std::uint64_t seed, std::size_t n, std::size_t d) {
  Rng rng(seed, 77);
  return sample_gaussian(rng, n, d);
}

double sphere(const LatentVector& z) {
  double s = 0;
  for (double v : z.values) s += v * v;
  return s;
}

// Quadratic centred outside the feasible box.
class ShiftedSphere : public Objective {
 public:
  std::size_t dim() const override { return 4; }
  LossBreakdown evaluate(const LatentVector& z, EvalPoint) const override {
    double s = 0;
    for (double v : z.values) s += (v - 30.0) * (v - 30.0);
    return {s, 0, 0, s};
  }
};

class Flat : public Objective {
 public:
  std::size_t dim() const override { return 3; }
  LossBreakdown evaluate(const LatentVector&, EvalPoint) const override { return {1, 0, 0, 1}; }
};

class FailsAt : public Objective {
 public:
  explicit FailsAt(int it) : it_(it) {}
  std::size_t dim() const override { return 3; }
  LossBreakdown evaluate(const LatentVector& z, EvalPoint at) const override {
    if (at.iteration == it_ && at.member == 2) throw OracleUnavailable("down");
    const double s = sphere(z);
    return {s, 0, 0, s};
  }

 private:
  int it_;
};

class Counting : public Objective {
 public:
  std::size_t dim() const override { return 5; }
  LossBreakdown evaluate(const LatentVector& z, EvalPoint) const override {
    calls_.fetch_add(3);
    const double s = sphere(z);
    return {s, 0, 0, s};
  }
  QueryLedger queries() const override { return {calls_.load(), 0, 0}; }

 private:
  mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace

TEST_CASE("constant fitness gives an exactly zero gradient") {
  auto eps = offsets(1, 50, 6);
  std::vector<double> f(50, 3.25);
  auto g = estimate_gradient(f, eps, 0.1);
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("gradient estimate is parallel to a linear objective") {
  const std::size_t d = 8, n = 2000;
  const double sigma = 0.1;
  std::vector<double> c{1.0, -2.0, 0.5, 3.0, 0.0, -1.0, 2.5, 0.25};
  std::vector<double> z(d, 0.3);
  auto eps = offsets(2, n, d);
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) f[i] += c[k] * (z[k] + sigma * eps[i].values[k]);
  CHECK(ref::cosine(estimate_gradient(f, eps, sigma), c) > 0.95);
}

TEST_CASE("gradient estimate on the quadratic at ones") {
  const std::size_t d = 16, n = 1000;
  const double sigma = 0.1;
  auto eps = offsets(3, n, d);
  std::vector<double> f(n), truth(d, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double x = 1.0 + sigma * eps[i].values[k];
      f[i] += x * x;
    }
  }
  CHECK(ref::cosine(estimate_gradient(f, eps, sigma), truth) > 0.9);
}

TEST_CASE("raw shaping is the plain weighted sum") {
  auto eps = offsets(4, 5, 3);
  std::vector<double> f{1.0, -2.0, 0.5, 4.0, 0.0};
  auto g = estimate_gradient(f, eps, 0.2, FitnessShaping::none);
  for (std::size_t k = 0; k < 3; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < 5; ++i) s += f[i] * eps[i].values[k];
    CHECK(g[k] == doctest::Approx(s / (5 * 0.2)).epsilon(1e-12));
  }
}

TEST_CASE("non-finite fitness is rejected") {
  auto eps = offsets(5, 4, 2);
  std::vector<double> f{1.0, std::numeric_limits<double>::quiet_NaN(), 0.0, 2.0};
  CHECK_THROWS_AS(estimate_gradient(f, eps, 0.1), InvalidFitness);
}

TEST_CASE("adam first step and zero gradient") {
  EsConfig cfg;
  AttackState s = initial_state(cfg, LatentVector(std::vector<double>{0.0, 0.0}));
  adam_step(s, std::vector<double>{1.0, 0.0}, cfg);
  CHECK(s.z.values[0] == doctest::Approx(-0.02).epsilon(1e-6));
  CHECK(s.z.values[1] == 0.0);

  AttackState u = initial_state(cfg, LatentVector(std::vector<double>{0.4, -1.0}));
  adam_step(u, std::vector<double>{0.0, 0.0}, cfg);
  CHECK(u.z.values == std::vector<double>{0.4, -1.0});
}

TEST_CASE("adam agrees with an independent transcription over 100 steps") {
  EsConfig cfg;
  Rng rng(6, 6);
  std::vector<double> z0(7);
  for (double& v : z0) v = rng.normal();
  AttackState s = initial_state(cfg, LatentVector(z0));
  ref::AdamRef r;
  std::vector<double> z = z0;
  for (int step = 0; step < 100; ++step) {
    std::vector<double> g(7);
    for (double& v : g) v = rng.normal();
    adam_step(s, g, cfg);
    s.t += 1;
    r.step(z, g, cfg.lr);
  }
  for (std::size_t k = 0; k < z.size(); ++k) CHECK(std::abs(s.z.values[k] - z[k]) < 1e-10);
}

TEST_CASE("projection examples") {
  auto p = project_latent(LatentVector(std::vector<double>{25, -30, 5}), 20.0);
  CHECK(p.values == std::vector<double>{20, -20, 5});
  LatentVector in(std::vector<double>{1, -2, 19.5});
  CHECK(project_latent(in, 20.0) == in);
  Rng rng(7, 7);
  for (int i = 0; i < 100; ++i) {
    LatentVector z(9);
    for (double& v : z.values) v = 40 * rng.normal();
    auto once = project_latent(z, 20.0);
    CHECK(project_latent(once, 20.0) == once);
    CHECK(once.max_abs() <= 20.0);
  }
}

TEST_CASE("plateau schedule") {
  EsConfig cfg;
  auto trace = [](int small, double step) {
    std::vector<double> t{1.0};
    for (int i = 0; i < small; ++i) t.push_back(t.back() - step);
    return t;
  };
  CHECK(plateau_schedule(trace(50, 1e-5), cfg, 0.02) == doctest::Approx(0.01));
  CHECK(plateau_schedule(trace(49, 1e-5), cfg, 0.02) == 0.02);
  CHECK(plateau_schedule(trace(99, 1e-5), cfg, 0.02) == doctest::Approx(0.01));
  CHECK(plateau_schedule(trace(100, 1e-5), cfg, 0.02) == doctest::Approx(0.005));

  auto broken = trace(30, 1e-5);
  broken.push_back(broken.back() - 1e-3);
  for (int i = 0; i < 30; ++i) broken.push_back(broken.back() - 1e-5);
  CHECK(plateau_schedule(broken, cfg, 0.02) == 0.02);

  CHECK(plateau_schedule(trace(50, 1e-5), cfg, cfg.lr_min) == cfg.lr_min);

  PlateauTracker tr;
  bool stop = false;
  double lr = cfg.lr_min;
  for (int i = 0; i < 50; ++i) lr = tr.update(0.0, lr, cfg, stop);
  CHECK(stop);
  CHECK(lr == cfg.lr_min);
}

TEST_CASE("zero iterations return the initial state without queries") {
  EsConfig cfg;
  cfg.max_iters = 0;
  Counting obj;
  AttackState s = initial_state(cfg, gaussian_start(cfg, obj.dim()));
  AttackState before = s;
  run_attack(obj, cfg, s);
  CHECK(s == before);
  CHECK(obj.queries().detector_queries == 0);
}

TEST_CASE("ES with Adam converges on the sphere with mirrored sampling") {
  EsConfig cfg;
  cfg.max_iters = 500;
  cfg.antithetic = true;
  SphereObjective obj(32);
  for (std::uint64_t seed : {1, 2}) {
    cfg.seed = seed;
    AttackState s = initial_state(cfg, gaussian_start(cfg, 32));
    double prev_best = std::numeric_limits<double>::infinity();
    RunHooks hooks;
    hooks.after_iteration = [&](const AttackState& st) {
      CHECK(st.best_loss <= prev_best);
      prev_best = st.best_loss;
      CHECK(st.z.max_abs() <= cfg.tau);
    };
    run_attack(obj, cfg, s, hooks);
    CHECK(s.best_loss < 1e-3);
    CHECK(s.bound_violations == 0);
  }
}

TEST_CASE("independent sampling descends on the sphere for every seed") {
  EsConfig cfg;
  cfg.max_iters = 500;
  SphereObjective obj(32);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.seed = seed;
    AttackState s = initial_state(cfg, gaussian_start(cfg, 32));
    const double start = sphere(s.z);
    run_attack(obj, cfg, s);
    CHECK(s.history.back().loss.total < start);
    CHECK(s.best_loss < 0.01 * start);
  }
}

TEST_CASE("iterates and candidates respect the box") {
  EsConfig cfg;
  cfg.max_iters = 400;
  cfg.lr = 0.5;
  cfg.lr_min = 1e-3;
  ShiftedSphere obj;
  AttackState s = initial_state(cfg, gaussian_start(cfg, 4));
  run_attack(obj, cfg, s);
  CHECK(s.bound_violations == 0);
  for (double v : s.z.values) {
    CHECK(v <= 20.0);
    CHECK(v > 19.0);
  }
}

TEST_CASE("ledger counts n + 1 evaluations per iteration") {
  EsConfig cfg;
  cfg.population = 6;
  cfg.max_iters = 7;
  Counting obj;
  AttackState s = initial_state(cfg, gaussian_start(cfg, obj.dim()));
  run_attack(obj, cfg, s);
  CHECK(s.ledger.detector_queries == 7u * 7u * 3u);
  for (std::size_t i = 0; i < s.history.size(); ++i) CHECK(s.history[i].ledger.detector_queries == (i + 1) * 21);
}

TEST_CASE("runs are deterministic across thread counts") {
  EsConfig cfg;
  cfg.max_iters = 30;
  cfg.seed = 9;
  SphereObjective obj(12);
  const int saved = parallel::threads();
  parallel::set_threads(1);
  AttackState a = initial_state(cfg, gaussian_start(cfg, 12));
  run_attack(obj, cfg, a);
  parallel::set_threads(4);
  AttackState b = initial_state(cfg, gaussian_start(cfg, 12));
  run_attack(obj, cfg, b);
  parallel::set_threads(saved);
  CHECK(a == b);
}

TEST_CASE("antithetic pairs mirror each other") {
  EsConfig cfg;
  cfg.antithetic = true;
  cfg.population = 5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.population = 70;
  cfg.max_iters = 300;
  SphereObjective obj(8);
  AttackState s = initial_state(cfg, gaussian_start(cfg, 8));
  run_attack(obj, cfg, s);
  CHECK(s.best_loss < 1e-2);
}

TEST_CASE("a flat objective never moves the iterate") {
  EsConfig cfg;
  cfg.max_iters = 5;
  Flat obj;
  AttackState s = initial_state(cfg, gaussian_start(cfg, 3));
  const auto z0 = s.z;
  run_attack(obj, cfg, s);
  CHECK(s.z == z0);
}

TEST_CASE("plateau at lr_min stops the run") {
  EsConfig cfg;
  cfg.max_iters = 1000;
  cfg.plateau_patience = 5;
  cfg.lr = 0.02;
  cfg.lr_min = 0.005;
  Flat obj;
  AttackState s = initial_state(cfg, gaussian_start(cfg, 3));
  run_attack(obj, cfg, s);
  CHECK(s.stopped);
  CHECK(s.lr_current == cfg.lr_min);
  // decays 0.02 -> 0.01 -> 0.005, then one more window to stop
  CHECK(s.t == 1 + 3 * 5);
}

TEST_CASE("an oracle failure leaves the last completed iteration") {
  EsConfig cfg;
  cfg.max_iters = 10;
  cfg.population = 4;
  FailsAt obj(3);
  AttackState s = initial_state(cfg, gaussian_start(cfg, 3));
  CHECK_THROWS_AS(run_attack(obj, cfg, s), OracleUnavailable);
  CHECK(s.t == 3);
  CHECK(s.history.size() == 3);
}

TEST_CASE("checkpoint round trip and resume are exact") {
  ref::TempDir dir("ckpt");
  EsConfig cfg;
  cfg.max_iters = 40;
  cfg.seed = 4;
  SphereObjective obj(10);

  AttackState full = initial_state(cfg, gaussian_start(cfg, 10));
  run_attack(obj, cfg, full);

  EsConfig half = cfg;
  half.max_iters = 17;
  AttackState part = initial_state(cfg, gaussian_start(cfg, 10));
  run_attack(obj, half, part);
  save_checkpoint(dir.path / "c.json", part, "cfg-a");
  std::string tag;
  AttackState loaded = load_checkpoint(dir.path / "c.json", &tag);
  CHECK(tag == "cfg-a");
  CHECK(loaded == part);
  run_attack(obj, cfg, loaded);
  CHECK(loaded == full);

  AttackState fresh = initial_state(cfg, gaussian_start(cfg, 10));
  save_checkpoint(dir.path / "fresh.json", fresh);
  CHECK(load_checkpoint(dir.path / "fresh.json") == fresh);

  {
    std::ofstream(dir.path / "bad.json") << "{\"format\": \"something-else\"}";
  }
  CHECK_THROWS_AS(load_checkpoint(dir.path / "bad.json"), ValidationError);
  {
    std::ofstream(dir.path / "trunc.json") << "{\"format\": \"latentpatch-checkpoint\", \"version\": 1, \"z\": [1";
  }
  CHECK_THROWS_AS(load_checkpoint(dir.path / "trunc.json"), ValidationError);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "missing.json"), InvalidArgument);
}

TEST_CASE("es config validation") {
  EsConfig c;
  c.population = 1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = EsConfig{};
  c.sigma = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = EsConfig{};
  c.lr_min = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = EsConfig{};
  c.box_lo = 0;
  c.box_hi = 1;
  CHECK(c.lower() == 0);
  CHECK(c.upper() == 1);
  CHECK(EsConfig{}.lower() == -20.0);
}
