#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "latentpatch/core/latent.hpp"
#include "latentpatch/losses/losses.hpp"
#include "latentpatch/oracles/oracles.hpp"

namespace lp {

enum class FitnessShaping { standardize, none };

struct EsConfig {
  int population = 70;
  double sigma = 0.1;
  double lr = 0.02;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double tau = 20.0;
  int max_iters = 300;
  double plateau_eps = 1e-4;
  int plateau_patience = 50;
  double lr_decay_factor = 0.5;
  double lr_min = 1e-5;
  std::uint64_t seed = 0;
  bool antithetic = false;  // members 2k and 2k+1 share one offset with opposite signs
  FitnessShaping shaping = FitnessShaping::standardize;
  // Feasible box. Unset (lo > hi) means [-tau, tau].
  double box_lo = 1.0;
  double box_hi = -1.0;

  void validate() const;
  double lower() const { return box_lo <= box_hi ? box_lo : -tau; }
  double upper() const { return box_lo <= box_hi ? box_hi : tau; }
};

struct EpochRecord {
  LossBreakdown loss;  // at the unperturbed z_t
  double lr = 0.0;     // used for the step out of z_t
  double best_loss = 0.0;
  QueryLedger ledger;  // cumulative after the epoch

  bool operator==(const EpochRecord&) const = default;
};

struct AttackState {
  LatentVector z;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  int t = 0;  // completed iterations
  double lr_current = 0.0;
  double best_loss = std::numeric_limits<double>::infinity();
  LatentVector best_z;
  std::vector<EpochRecord> history;
  QueryLedger ledger;
  int plateau_counter = 0;
  bool stopped = false;  // plateau at lr_min
  // Iterates or candidates found outside the feasible box. Must stay 0.
  std::uint64_t bound_violations = 0;

  bool operator==(const AttackState&) const = default;
};

// Fresh state at z0 (projected). Moments zero, lr from cfg.
AttackState initial_state(const EsConfig& cfg, LatentVector z0);
// z0 ~ N(0, I) from the cfg seed.
LatentVector gaussian_start(const EsConfig& cfg, std::size_t dim);

// Elementwise clamp to [-tau, tau].
LatentVector project_latent(LatentVector z, double tau);
LatentVector project_box(LatentVector z, double lo, double hi);

// g = 1/(n sigma) sum_i F~_i eps_i with F~ standardized (or raw). A
// standardized field with std < 1e-12 gives exactly zero. Throws
// InvalidFitness on any non-finite fitness.
std::vector<double> estimate_gradient(std::span<const double> fitness, std::span<const LatentVector> offsets,
                                      double sigma, FitnessShaping shaping = FitnessShaping::standardize);

// One Adam descent step on state.z with step count state.t + 1 and
// state.lr_current. Moments are updated in place; z is not projected.
void adam_step(AttackState& state, std::span<const double> gradient, const EsConfig& cfg);

// Counts consecutive epochs with |delta| < plateau_eps.
class PlateauTracker {
 public:
  explicit PlateauTracker(int counter = 0) : counter_(counter) {}
  // Feeds one delta; returns the lr for the next epoch. After patience small
  // deltas: decay (counter resets), or set stop when already at lr_min.
  double update(double delta, double lr, const EsConfig& cfg, bool& stop);
  int counter() const { return counter_; }

 private:
  int counter_;
};

// Replays a whole trace of totals from lr_current; returns the final lr.
double plateau_schedule(std::span<const double> totals, const EsConfig& cfg, double lr_current);

struct EvalPoint {
  int iteration = 0;
  int member = 0;  // population index; n for the unperturbed iterate
};

// Fitness function. evaluate() is called concurrently.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dim() const = 0;
  virtual LossBreakdown evaluate(const LatentVector& z, EvalPoint at) const = 0;
  virtual QueryLedger queries() const { return {}; }
};

// |z|^2, no queries.
class SphereObjective : public Objective {
 public:
  explicit SphereObjective(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  LossBreakdown evaluate(const LatentVector& z, EvalPoint at) const override;

 private:
  std::size_t dim_;
};

struct RunHooks {
  std::function<void(const AttackState&)> after_iteration;
};

// Iterates until cfg.max_iters or the plateau stop. The state is changed
// only between iterations, so on an exception it holds the last completed
// iteration and can be checkpointed.
void run_attack(const Objective& objective, const EsConfig& cfg, AttackState& state, const RunHooks& hooks = {});

// JSON dump with every double written round-trip exact. tag is stored
// verbatim (the harness keeps its config there).
void save_checkpoint(const std::filesystem::path& path, const AttackState& state, const std::string& tag = {});
AttackState load_checkpoint(const std::filesystem::path& path, std::string* tag = nullptr);

}  // namespace lp
