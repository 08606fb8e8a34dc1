#include "latentpatch/optimizer/es.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>

#include <json.hpp>

#include "latentpatch/core/error.hpp"

namespace lp {

using nlohmann::json;

void EsConfig::validate() const {
  if (population < 2) throw InvalidArgument("population must be >= 2");
  if (antithetic && population % 2 != 0) throw InvalidArgument("antithetic sampling needs an even population");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be > 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidArgument("lr must be > 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("tau must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw InvalidArgument("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw InvalidArgument("adam_eps must be > 0");
  if (max_iters < 0) throw InvalidArgument("max_iters must be >= 0");
  if (!(plateau_eps >= 0.0)) throw InvalidArgument("plateau_eps must be >= 0");
  if (plateau_patience < 1) throw InvalidArgument("plateau_patience must be >= 1");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) throw InvalidArgument("lr_decay_factor must lie in (0, 1]");
  if (!(lr_min > 0.0 && lr_min <= lr)) throw InvalidArgument("lr_min must lie in (0, lr]");
}

LatentVector project_latent(LatentVector z, double tau) { return project_box(std::move(z), -tau, tau); }

LatentVector project_box(LatentVector z, double lo, double hi) {
  for (double& v : z.values) v = std::clamp(v, lo, hi);
  return z;
}

LatentVector gaussian_start(const EsConfig& cfg, std::size_t dim) {
  Rng rng(cfg.seed, stream_id(0x5a47, 0, 0));
  return std::move(sample_gaussian(rng, 1, dim).front());
}

AttackState initial_state(const EsConfig& cfg, LatentVector z0) {
  AttackState s;
  s.z = project_box(std::move(z0), cfg.lower(), cfg.upper());
  s.adam_m.assign(s.z.dim(), 0.0);
  s.adam_v.assign(s.z.dim(), 0.0);
  s.lr_current = cfg.lr;
  s.best_z = s.z;
  return s;
}

std::vector<double> estimate_gradient(std::span<const double> fitness, std::span<const LatentVector> offsets,
                                      double sigma, FitnessShaping shaping) {
  const std::size_t n = fitness.size();
  if (n < 2) throw InvalidArgument("estimate_gradient needs n >= 2");
  if (offsets.size() != n) throw InvalidArgument("estimate_gradient: fitness/offset count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(fitness[i])) throw InvalidFitness("non-finite fitness at member " + std::to_string(i));
  }
  const std::size_t d = offsets[0].dim();
  std::vector<double> g(d, 0.0);

  std::vector<double> shaped(fitness.begin(), fitness.end());
  if (shaping == FitnessShaping::standardize) {
    double mean = 0.0;
    for (double f : fitness) mean += f;
    mean /= double(n);
    double var = 0.0;
    for (double f : fitness) var += (f - mean) * (f - mean);
    const double sd = std::sqrt(var / double(n));
    if (sd < 1e-12) return g;
    for (double& f : shaped) f = (f - mean) / sd;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (offsets[i].dim() != d) throw InvalidArgument("estimate_gradient: offset dimension mismatch");
    for (std::size_t k = 0; k < d; ++k) g[k] += shaped[i] * offsets[i].values[k];
  }
  const double scale = 1.0 / (double(n) * sigma);
  for (double& v : g) v *= scale;
  return g;
}

void adam_step(AttackState& state, std::span<const double> gradient, const EsConfig& cfg) {
  const std::size_t d = state.z.dim();
  if (gradient.size() != d || state.adam_m.size() != d || state.adam_v.size() != d) {
    throw InvalidArgument("adam_step: dimension mismatch");
  }
  const double step = double(state.t) + 1.0;
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, step);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, step);
  for (std::size_t k = 0; k < d; ++k) {
    const double g = gradient[k];
    state.adam_m[k] = cfg.adam_beta1 * state.adam_m[k] + (1.0 - cfg.adam_beta1) * g;
    state.adam_v[k] = cfg.adam_beta2 * state.adam_v[k] + (1.0 - cfg.adam_beta2) * g * g;
    const double mhat = state.adam_m[k] / c1;
    const double vhat = state.adam_v[k] / c2;
    state.z.values[k] -= state.lr_current * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

double PlateauTracker::update(double delta, double lr, const EsConfig& cfg, bool& stop) {
  if (std::abs(delta) < cfg.plateau_eps) {
    ++counter_;
  } else {
    counter_ = 0;
  }
  if (counter_ < cfg.plateau_patience) return lr;
  counter_ = 0;
  if (lr <= cfg.lr_min) {
    stop = true;
    return cfg.lr_min;
  }
  return std::max(lr * cfg.lr_decay_factor, cfg.lr_min);
}

double plateau_schedule(std::span<const double> totals, const EsConfig& cfg, double lr_current) {
  if (totals.empty()) throw InvalidArgument("plateau_schedule needs a non-empty history");
  PlateauTracker tracker;
  bool stop = false;
  double lr = lr_current;
  for (std::size_t i = 1; i < totals.size(); ++i) lr = tracker.update(totals[i] - totals[i - 1], lr, cfg, stop);
  return lr;
}

LossBreakdown SphereObjective::evaluate(const LatentVector& z, EvalPoint) const {
  double s = 0.0;
  for (double v : z.values) s += v * v;
  return {s, 0.0, 0.0, s};
}

namespace {

bool inside(const LatentVector& z, double lo, double hi) {
  return std::all_of(z.values.begin(), z.values.end(), [&](double v) { return v >= lo && v <= hi; });
}

}  // namespace

void run_attack(const Objective& objective, const EsConfig& cfg, AttackState& state, const RunHooks& hooks) {
  cfg.validate();
  const std::size_t d = objective.dim();
  if (state.z.dim() != d) throw InvalidArgument("attack state dimension does not match the objective");
  const int n = cfg.population;
  const double lo = cfg.lower(), hi = cfg.upper();
  const QueryLedger base = state.ledger;
  const QueryLedger start = objective.queries();

  PlateauTracker plateau(state.plateau_counter);
  while (state.t < cfg.max_iters && !state.stopped) {
    const int t = state.t;
    std::vector<LatentVector> offsets(n);
    for (int i = 0; i < n; ++i) {
      if (cfg.antithetic && i % 2 == 1) {
        offsets[i] = offsets[i - 1];
        for (double& v : offsets[i].values) v = -v;
        continue;
      }
      Rng rng(cfg.seed, stream_id(std::uint64_t(t), std::uint64_t(cfg.antithetic ? i / 2 : i), 0xe5));
      offsets[i] = LatentVector(d);
      for (double& v : offsets[i].values) v = rng.normal();
    }

    std::vector<LatentVector> points(n + 1);
    std::uint64_t violations = 0;
    for (int i = 0; i < n; ++i) {
      LatentVector c = state.z;
      for (std::size_t k = 0; k < d; ++k) c.values[k] += cfg.sigma * offsets[i].values[k];
      points[i] = project_box(std::move(c), lo, hi);
      if (!inside(points[i], lo, hi)) ++violations;
    }
    points[n] = state.z;
    if (!inside(state.z, lo, hi)) ++violations;

    std::vector<LossBreakdown> losses(n + 1);
    std::vector<std::exception_ptr> errors(n + 1);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i <= n; ++i) {
      try {
        losses[i] = objective.evaluate(points[i], {t, i});
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    std::vector<double> fitness(n);
    for (int i = 0; i < n; ++i) fitness[i] = losses[i].total;
    if (!std::isfinite(losses[n].total)) throw InvalidFitness("non-finite loss at the current iterate");
    const std::vector<double> g = estimate_gradient(fitness, offsets, cfg.sigma, cfg.shaping);

    AttackState next = state;
    next.bound_violations += violations;
    if (losses[n].total < next.best_loss) {
      next.best_loss = losses[n].total;
      next.best_z = state.z;
    }
    next.ledger = base + (objective.queries() - start);
    next.history.push_back({losses[n], state.lr_current, next.best_loss, next.ledger});

    adam_step(next, g, cfg);
    next.z = project_box(std::move(next.z), lo, hi);
    next.t = t + 1;
    if (next.history.size() >= 2) {
      const double delta = losses[n].total - next.history[next.history.size() - 2].loss.total;
      next.lr_current = plateau.update(delta, next.lr_current, cfg, next.stopped);
    }
    next.plateau_counter = plateau.counter();
    state = std::move(next);
    if (hooks.after_iteration) hooks.after_iteration(state);
  }
}

namespace {

json ledger_json(const QueryLedger& l) {
  return {{"detector", l.detector_queries}, {"classifier", l.classifier_queries}, {"generator", l.generator_queries}};
}

QueryLedger ledger_from(const json& j) {
  return {j.at("detector").get<std::uint64_t>(), j.at("classifier").get<std::uint64_t>(),
          j.at("generator").get<std::uint64_t>()};
}

json loss_json(const LossBreakdown& l) { return {l.det, l.tv, l.cls, l.total}; }

LossBreakdown loss_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

constexpr const char* kFormat = "latentpatch-checkpoint";
constexpr int kVersion = 1;

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const AttackState& s, const std::string& tag) {
  json hist = json::array();
  for (const auto& r : s.history) {
    hist.push_back({{"loss", loss_json(r.loss)}, {"lr", r.lr}, {"best", r.best_loss}, {"ledger", ledger_json(r.ledger)}});
  }
  json j = {{"format", kFormat},
            {"version", kVersion},
            {"tag", tag},
            {"z", s.z.values},
            {"adam_m", s.adam_m},
            {"adam_v", s.adam_v},
            {"t", s.t},
            {"lr", s.lr_current},
            {"best_loss", std::isfinite(s.best_loss) ? json(s.best_loss) : json(nullptr)},
            {"best_z", s.best_z.values},
            {"history", hist},
            {"ledger", ledger_json(s.ledger)},
            {"plateau_counter", s.plateau_counter},
            {"stopped", s.stopped},
            {"bound_violations", s.bound_violations}};
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw InvalidArgument("cannot write checkpoint " + tmp.string());
    out << j.dump() << "\n";
    if (!out) throw InvalidArgument("cannot write checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InvalidArgument("cannot move checkpoint into place: " + ec.message());
}

AttackState load_checkpoint(const std::filesystem::path& path, std::string* tag) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read checkpoint " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format") != kFormat) throw ValidationError(path.string() + ": not a checkpoint");
    if (j.at("version") != kVersion) throw ValidationError(path.string() + ": unsupported checkpoint version");
    AttackState s;
    s.z = LatentVector(j.at("z").get<std::vector<double>>());
    s.adam_m = j.at("adam_m").get<std::vector<double>>();
    s.adam_v = j.at("adam_v").get<std::vector<double>>();
    s.t = j.at("t").get<int>();
    s.lr_current = j.at("lr").get<double>();
    s.best_loss = j.at("best_loss").is_null() ? std::numeric_limits<double>::infinity() : j.at("best_loss").get<double>();
    s.best_z = LatentVector(j.at("best_z").get<std::vector<double>>());
    for (const auto& r : j.at("history")) {
      s.history.push_back({loss_from(r.at("loss")), r.at("lr").get<double>(), r.at("best").get<double>(),
                           ledger_from(r.at("ledger"))});
    }
    s.ledger = ledger_from(j.at("ledger"));
    s.plateau_counter = j.at("plateau_counter").get<int>();
    s.stopped = j.at("stopped").get<bool>();
    s.bound_violations = j.at("bound_violations").get<std::uint64_t>();
    if (s.adam_m.size() != s.z.dim() || s.adam_v.size() != s.z.dim() || s.best_z.dim() != s.z.dim() ||
        s.t != static_cast<int>(s.history.size())) {
      throw ValidationError(path.string() + ": inconsistent checkpoint");
    }
    if (tag) *tag = j.at("tag").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed checkpoint: " + e.what());
  }
}

}  // namespace lp
