#include "latentpatch/harness/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "latentpatch/core/error.hpp"
#include "latentpatch/core/png_io.hpp"
#include "latentpatch/http.hpp"
#include "latentpatch/optimizer/patch_objective.hpp"
#include "latentpatch/oracles/wire.hpp"

namespace lp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(DetMode mode) { return mode == DetMode::obj_only ? "obj_only" : "obj_times_cls"; }

std::optional<DetMode> parse_det_mode(const std::string& s) {
  if (s == "obj_times_cls") return DetMode::obj_times_cls;
  if (s == "obj_only") return DetMode::obj_only;
  return std::nullopt;
}

void RunConfig::validate() const {
  es.validate();
  weights.validate();
  transform.validate();
  generator.validate();
  detector.validate();
  if (weights.lambda_cls > 0.0 || std::any_of(lambda_cls.begin(), lambda_cls.end(), [](double l) { return l > 0.0; })) {
    classifier.validate();
  }
  corpus.validate();
  if (corpus.count < 2) throw InvalidArgument("corpus count must be >= 2 (train and eval)");
  eval.validate();
  baseline.validate();
  if (batch < 0) throw InvalidArgument("batch must be >= 0");
  if (checkpoint_every < 1) throw InvalidArgument("checkpoint_every must be >= 1");
  if (generator.kind != GeneratorKind::identity && generator.latent_dim < 1) {
    throw InvalidArgument("latent_dim must be >= 1");
  }
  for (const auto& m : methods) {
    if (m != "ours" && !parse_baseline(m)) {
      throw InvalidArgument("unknown method '" + m + "' (valid: ours, latent_rs, pixel_rs, square, pixel_nes)");
    }
  }
  if (methods.empty()) throw InvalidArgument("methods must not be empty");
  if (pops.empty() || lambda_cls.empty() || det_modes.empty()) throw InvalidArgument("ablation grids must not be empty");
  for (int p : pops) {
    if (p < 2) throw InvalidArgument("population must be >= 2");
    if (es.antithetic && p % 2 != 0) throw InvalidArgument("antithetic sampling needs even populations");
  }
  for (double l : lambda_cls) {
    if (!(l >= 0.0)) throw InvalidArgument("lambda_cls must be >= 0");
  }
}

json RunConfig::to_json() const {
  json grid_modes = json::array();
  for (auto m : det_modes) grid_modes.push_back(to_string(m));
  return {
      {"es",
       {{"population", es.population},
        {"sigma", es.sigma},
        {"lr", es.lr},
        {"beta1", es.adam_beta1},
        {"beta2", es.adam_beta2},
        {"adam_eps", es.adam_eps},
        {"tau", es.tau},
        {"max_iters", es.max_iters},
        {"plateau_eps", es.plateau_eps},
        {"plateau_patience", es.plateau_patience},
        {"lr_decay_factor", es.lr_decay_factor},
        {"lr_min", es.lr_min},
        {"seed", es.seed},
        {"antithetic", es.antithetic},
        {"shaping", es.shaping == FitnessShaping::standardize ? "standardize" : "none"}}},
      {"weights",
       {{"lambda_tv", weights.lambda_tv},
        {"lambda_cls", weights.lambda_cls},
        {"det_mode", to_string(weights.det_mode)},
        {"tv_normalization", weights.tv_normalization == TvNormalization::mean ? "mean" : "sum"}}},
      {"transform",
       {{"rot_range", transform.rot_range},
        {"brightness_range", transform.brightness_range},
        {"scale_min", transform.scale_min},
        {"scale_max", transform.scale_max},
        {"patch_area_fraction", transform.patch_area_fraction}}},
      {"generator",
       {{"kind", generator.kind == GeneratorKind::external ? "external" : "toy"},
        {"latent_dim", generator.latent_dim},
        {"width", generator.out_width},
        {"height", generator.out_height},
        {"seed", generator.seed},
        {"endpoint", generator.endpoint}}},
      {"detector",
       {{"kind", detector.kind == OracleKind::external ? "external" : "toy"},
        {"input_width", detector.input_width},
        {"input_height", detector.input_height},
        {"score_threshold", detector.score_threshold},
        {"person_class_index", detector.person_class_index},
        {"num_classes", detector.num_classes},
        {"endpoint", detector.endpoint}}},
      {"classifier",
       {{"kind", classifier.kind == OracleKind::external ? "external" : "toy"},
        {"num_classes", classifier.num_classes},
        {"target_class", classifier.target_class},
        {"seed", classifier.seed},
        {"endpoint", classifier.endpoint}}},
      {"corpus",
       {{"count", corpus.count},
        {"width", corpus.image_width},
        {"height", corpus.image_height},
        {"seed", corpus.seed},
        {"background", static_cast<int>(corpus.background)},
        {"persons_per_scene", corpus.persons_per_scene},
        {"min_scale", corpus.min_scale},
        {"max_scale", corpus.max_scale},
        {"grid_aligned", corpus.grid_aligned},
        {"dir", corpus_dir.string()}}},
      {"eval", {{"iou_threshold", eval.iou_threshold}, {"randomized", eval.randomized}, {"seed", eval.seed}}},
      {"baseline",
       {{"budget", baseline.budget},
        {"patch_width", baseline.patch_width},
        {"patch_height", baseline.patch_height},
        {"block_fraction", baseline.block_fraction},
        {"latent_sigma", baseline.latent_sigma},
        {"nes_sigma", baseline.nes_sigma},
        {"nes_lr", baseline.nes_lr}}},
      {"batch", batch},
      {"output_dir", output_dir.string()},
      {"methods", methods},
      {"pops", pops},
      {"lambda_cls_grid", lambda_cls},
      {"det_modes", grid_modes}};
}

namespace {

// The parts of the config a checkpoint must agree with. The iteration cap
// may grow between runs.
std::string resume_tag(const RunConfig& cfg) {
  json j = cfg.to_json();
  j["es"].erase("max_iters");
  for (const char* k : {"output_dir", "methods", "pops", "lambda_cls_grid", "det_modes"}) j.erase(k);
  return j.dump();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InvalidArgument("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".write_test";
  {
    std::ofstream out(probe);
    if (!out) throw InvalidArgument("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

std::string fmt(double v, int prec = 10) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
  return buf;
}

std::string percent(double ap) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * ap);
  return buf;
}

QueryLedger snapshot(const Detector& det, const Classifier* cls, const Generator& gen) {
  return {det.queries(), cls ? cls->queries() : 0, gen.queries()};
}

std::vector<ImageBuffer> train_images(const RunConfig& cfg, const SplitCorpus& corpus) {
  const std::size_t n = cfg.batch > 0 ? std::min<std::size_t>(cfg.batch, corpus.train.size()) : corpus.train.size();
  std::vector<ImageBuffer> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(corpus.train[i].image);
  if (out.empty()) throw InvalidArgument("the training split is empty");
  return out;
}

SplitCorpus load_or_generate(const RunConfig& cfg, std::ostream& out) {
  SplitCorpus c;
  if (cfg.corpus_dir.empty()) {
    c = make_split_corpus(cfg.corpus);
  } else {
    c = load_split_corpus(cfg.corpus_dir);
  }
  if (c.train.empty() || c.eval.empty()) {
    throw InvalidArgument("corpus needs non-empty train and eval splits" +
                          (cfg.corpus_dir.empty() ? std::string() : " under " + cfg.corpus_dir.string()));
  }
  auto det = make_detector(cfg.detector);
  verify_clean(c.train, *det, cfg.eval, out);
  verify_clean(c.eval, *det, cfg.eval, out);
  return c;
}

void write_eval_outputs(const fs::path& dir, const EvalReport& report, std::uint64_t train_queries) {
  write_text(dir / "report.json", report.to_json() + "\n");
  write_text(dir / "eval.csv", "ap_clean,ap_person,eval_queries,train_queries\n" + fmt(report.ap_clean) + "," +
                                   fmt(report.ap_person) + "," + std::to_string(report.detector_queries) + "," +
                                   std::to_string(train_queries) + "\n");
}

void write_table(const fs::path& dir, const std::string& stem, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, std::ostream& out) {
  std::ostringstream csv;
  for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
  csv << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) csv << (i ? "," : "") << r[i];
    csv << "\n";
  }
  write_text(dir / (stem + ".csv"), csv.str());

  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  std::ostringstream txt;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      txt << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << (i ? std::right : std::left) << cells[i];
    }
    txt << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  write_text(dir / (stem + ".txt"), txt.str());
  out << txt.str();
}

}  // namespace

SplitCorpus make_split_corpus(const CorpusSpec& spec) {
  spec.validate();
  const int eval_count = std::max(1, spec.count / 3);
  CorpusSpec train = spec;
  train.count = spec.count - eval_count;
  train.id_prefix = "train";
  CorpusSpec eval = spec;
  eval.count = eval_count;
  eval.seed = mix64(spec.seed ^ 0xe7a15eedULL);
  eval.id_prefix = "eval";
  if (train.count < 1) throw InvalidArgument("corpus count too small for a train/eval split");
  return {generate_corpus(train), generate_corpus(eval)};
}

double verify_clean(std::span<const Scene> scenes, const Detector& detector, const EvalConfig& eval,
                    std::ostream& log) {
  EvalConfig plain = eval;
  plain.randomized = false;
  const EvalReport r = evaluate_patch(scenes, std::nullopt, detector, plain);
  if (r.ap_person < 1.0) {
    std::string msg = "clean AP is " + percent(r.ap_person) + "%, the corpus is not fully detectable";
    if (detector.spec().kind == OracleKind::toy) throw InvariantViolation(msg);
    log << "warning: " << msg << "\n";
  }
  return r.ap_person;
}

void write_metrics_csv(const fs::path& path, std::span<const EpochRecord> history) {
  std::ostringstream s;
  s << "epoch,total_loss,det_loss,tv_loss,cls_loss,lr,best_loss,detector_queries\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& r = history[i];
    s << i + 1 << ',' << fmt(r.loss.total) << ',' << fmt(r.loss.det) << ',' << fmt(r.loss.tv) << ','
      << fmt(r.loss.cls) << ',' << fmt(r.lr) << ',' << fmt(r.best_loss) << ',' << r.ledger.detector_queries << "\n";
  }
  write_text(path, s.str());
}

void write_loss_svg(const fs::path& path, std::span<const EpochRecord> history, const std::string& title) {
  constexpr double W = 640, H = 360, L = 60, R = 20, T = 40, B = 40;
  double lo = 0.0, hi = 1e-12;
  for (const auto& r : history) {
    hi = std::max({hi, r.loss.total, r.loss.det});
    lo = std::min({lo, r.loss.total, r.loss.det});
  }
  const double n = std::max<double>(1.0, double(history.size()) - 1.0);
  auto px = [&](std::size_t i) { return L + (W - L - R) * double(i) / n; };
  auto py = [&](double v) { return H - B - (H - T - B) * (v - lo) / (hi - lo); };
  auto poly = [&](auto get, const char* color) {
    std::ostringstream p;
    p << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < history.size(); ++i) p << fmt(px(i), 6) << ',' << fmt(py(get(history[i])), 6) << ' ';
    p << "\"/>\n";
    return p.str();
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << L << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << (W - R) << "\" y=\"" << H - 10 << "\" text-anchor=\"end\">epoch " << history.size() << "</text>\n"
    << "<text x=\"" << L - 6 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\">" << fmt(hi, 3) << "</text>\n"
    << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << fmt(lo, 3) << "</text>\n";
  if (!history.empty()) {
    s << poly([](const EpochRecord& r) { return r.loss.total; }, "#1f77b4")
      << poly([](const EpochRecord& r) { return r.loss.det; }, "#d62728");
  }
  s << "<text x=\"" << W - R - 150 << "\" y=\"" << T << "\" fill=\"#1f77b4\">total loss</text>\n"
    << "<text x=\"" << W - R - 150 << "\" y=\"" << T + 16 << "\" fill=\"#d62728\">detection loss</text>\n"
    << "</svg>\n";
  write_text(path, s.str());
}

AttackSummary run_attack_to_dir(const RunConfig& cfg, const SplitCorpus& corpus, const fs::path& dir,
                                std::ostream& out) {
  ensure_dir(dir);
  const auto gen = make_generator(cfg.generator);
  const auto det = make_detector(cfg.detector);
  const auto cls = cfg.weights.lambda_cls > 0.0 ? make_classifier(cfg.classifier) : nullptr;

  const QueryLedger q0 = snapshot(*det, cls.get(), *gen);
  PatchObjective objective(*gen, {det.get(), cls.get()}, prepare_scenes(train_images(cfg, corpus), *det),
                           cfg.transform, cfg.weights, cfg.es.seed);
  const std::string tag = resume_tag(cfg);
  const fs::path ckpt = dir / "checkpoint.json";

  AttackState state;
  if (cfg.resume && fs::exists(ckpt)) {
    std::string saved;
    state = load_checkpoint(ckpt, &saved);
    if (saved != tag) throw InvalidArgument(ckpt.string() + " was written with a different configuration");
    if (state.z.dim() != objective.dim()) throw InvalidArgument(ckpt.string() + ": latent dimension mismatch");
    out << "resuming " << dir.string() << " at iteration " << state.t << "\n";
  } else {
    state = initial_state(cfg.es, gaussian_start(cfg.es, objective.dim()));
    state.ledger = objective.queries() - q0;
  }
  write_text(dir / "config.json", cfg.to_json().dump(2) + "\n");

  auto persist = [&](const AttackState& s) {
    save_checkpoint(ckpt, s, tag);
    write_metrics_csv(dir / "metrics.csv", s.history);
  };
  RunHooks hooks;
  hooks.after_iteration = [&](const AttackState& s) {
    if (s.t % cfg.checkpoint_every == 0) persist(s);
    if (s.t % 10 == 0) {
      const auto& r = s.history.back();
      out << "iter " << s.t << " total " << fmt(r.loss.total, 5) << " det " << fmt(r.loss.det, 5) << " best "
          << fmt(s.best_loss, 5) << " lr " << fmt(r.lr, 3) << "\n";
      out.flush();
    }
  };
  try {
    run_attack(objective, cfg.es, state, hooks);
  } catch (...) {
    persist(state);
    throw;
  }
  persist(state);
  if (cfg.svg) write_loss_svg(dir / "loss.svg", state.history, "latent ES attack");
  if (state.bound_violations != 0) {
    throw InvariantViolation(std::to_string(state.bound_violations) + " iterates or candidates left the tau box");
  }

  const ImageBuffer patch = quantize_u8(gen->generate(state.best_z));
  write_png(dir / "best_patch.png", patch);
  const EvalReport report = evaluate_patch(corpus.eval, patch, *det, cfg.eval);
  write_eval_outputs(dir, report, state.ledger.detector_queries);

  AttackSummary s;
  s.attack = "ours";
  s.lambda_cls = cfg.weights.lambda_cls;
  s.population = cfg.es.population;
  s.det_mode = cfg.weights.det_mode;
  s.queries = state.ledger.detector_queries;
  s.ap = report.ap_person;
  s.ap_clean = report.ap_clean;
  s.best_loss = state.best_loss;
  s.iterations = state.t;
  s.dir = dir;
  out << "eval AP " << percent(report.ap_person) << "% (clean " << percent(report.ap_clean) << "%), "
      << s.queries << " training queries\n";
  return s;
}

int cmd_corpus(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw InvalidArgument("corpus: --out is required");
  ensure_dir(cfg.output_dir);
  const SplitCorpus split = make_split_corpus(cfg.corpus);
  save_split_corpus(cfg.output_dir, split);
  auto det = make_detector(cfg.detector);
  const double a = verify_clean(split.train, *det, cfg.eval, out);
  const double b = verify_clean(split.eval, *det, cfg.eval, out);
  out << "wrote " << split.train.size() << " train + " << split.eval.size() << " eval scenes to "
      << cfg.output_dir.string() << "\n"
      << "clean AP train " << percent(a) << "%, eval " << percent(b) << "%\n";
  return kExitOk;
}

int cmd_attack(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw InvalidArgument("attack: --out is required");
  const SplitCorpus corpus = load_or_generate(cfg, out);
  run_attack_to_dir(cfg, corpus, cfg.output_dir, out);
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw InvalidArgument("compare: --out is required");
  ensure_dir(cfg.output_dir);
  const SplitCorpus corpus = load_or_generate(cfg, out);
  const std::vector<ImageBuffer> images = train_images(cfg, corpus);
  const std::size_t batch = images.size();

  std::vector<AttackSummary> rows;
  std::uint64_t budget = cfg.baseline.budget;
  const bool has_ours = std::find(cfg.methods.begin(), cfg.methods.end(), "ours") != cfg.methods.end();
  if (has_ours) {
    RunConfig ours = cfg;
    ours.es.max_iters = es_iterations(budget, batch, cfg.es.population);
    ours.resume = false;
    out << "ours: " << ours.es.max_iters << " iterations at population " << cfg.es.population << "\n";
    rows.push_back(run_attack_to_dir(ours, corpus, cfg.output_dir / "ours", out));
    budget = rows.back().queries;  // everyone else gets exactly what ours spent
  }
  for (const auto& name : cfg.methods) {
    if (name == "ours") continue;
    const BaselineKind kind = *parse_baseline(name);
    const auto det = make_detector(cfg.detector);
    const auto gen = make_generator(cfg.generator);
    const bool latent = kind == BaselineKind::latent_rs;
    const auto cls = latent && cfg.weights.lambda_cls > 0.0 ? make_classifier(cfg.classifier) : nullptr;
    BaselineContext ctx{det.get(), cls.get(), latent ? gen.get() : nullptr, images, cfg.transform, cfg.weights,
                        cfg.es.seed};
    BaselineSpec spec = cfg.baseline;
    spec.kind = kind;
    spec.budget = budget;
    spec.seed = cfg.es.seed;
    spec.nes_population = cfg.es.population;
    out << name << ": budget " << budget << " detector queries\n";
    const BaselineResult r = run_baseline(ctx, spec);

    const fs::path dir = cfg.output_dir / name;
    ensure_dir(dir);
    write_metrics_csv(dir / "metrics.csv", r.history);
    if (cfg.svg) write_loss_svg(dir / "loss.svg", r.history, name);
    const ImageBuffer patch = quantize_u8(r.patch);
    write_png(dir / "best_patch.png", patch);
    const EvalReport report = evaluate_patch(corpus.eval, patch, *det, cfg.eval);
    write_eval_outputs(dir, report, r.ledger.detector_queries);
    AttackSummary s;
    s.attack = name;
    s.lambda_cls = latent ? cfg.weights.lambda_cls : 0.0;
    s.population = kind == BaselineKind::pixel_nes ? cfg.es.population : 0;
    s.queries = r.ledger.detector_queries;
    s.ap = report.ap_person;
    s.ap_clean = report.ap_clean;
    s.best_loss = r.best_loss;
    s.iterations = static_cast<int>(r.history.size());
    s.dir = dir;
    out << name << ": eval AP " << percent(s.ap) << "%\n";
    rows.push_back(s);
  }

  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows) {
    const bool pixel = r.attack == "pixel_rs" || r.attack == "square" || r.attack == "pixel_nes";
    table.push_back({r.attack, pixel ? "-" : fmt(r.lambda_cls, 4), r.population ? std::to_string(r.population) : "-",
                     std::to_string(r.queries), percent(r.ap)});
  }
  write_table(cfg.output_dir, "compare", {"attack", "lambda_cls", "pop", "queries", "map"}, table, out);
  return kExitOk;
}

int cmd_ablate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw InvalidArgument("ablate: --out is required");
  ensure_dir(cfg.output_dir);
  const SplitCorpus corpus = load_or_generate(cfg, out);

  std::vector<std::vector<std::string>> table;
  for (DetMode mode : cfg.det_modes) {
    for (double lambda : cfg.lambda_cls) {
      for (int pop : cfg.pops) {
        RunConfig cell = cfg;
        cell.es.population = pop;
        cell.weights.lambda_cls = lambda;
        cell.weights.det_mode = mode;
        const std::string name = "pop" + std::to_string(pop) + "_cls" + fmt(lambda, 4) + "_" + to_string(mode);
        out << "cell " << name << "\n";
        const AttackSummary s = run_attack_to_dir(cell, corpus, cfg.output_dir / name, out);
        table.push_back({"ours", fmt(lambda, 4), std::to_string(pop), to_string(mode), std::to_string(s.queries),
                         percent(s.ap)});
      }
    }
  }
  write_table(cfg.output_dir, "ablation", {"attack", "lambda_cls", "pop", "det_mode", "queries", "map"}, table, out);
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const fs::path& patch_png, std::ostream& out) {
  cfg.validate();
  std::vector<Scene> scenes;
  if (cfg.corpus_dir.empty()) {
    scenes = make_split_corpus(cfg.corpus).eval;
  } else if (fs::is_directory(cfg.corpus_dir / "eval")) {
    scenes = load_corpus(cfg.corpus_dir / "eval").scenes;
  } else {
    scenes = load_corpus(cfg.corpus_dir).scenes;
  }
  std::optional<ImageBuffer> patch;
  if (!patch_png.empty()) patch = read_png(patch_png);
  const auto det = make_detector(cfg.detector);
  const EvalReport report = evaluate_patch(scenes, patch, *det, cfg.eval);
  if (!cfg.output_dir.empty()) {
    ensure_dir(cfg.output_dir);
    write_text(cfg.output_dir / "report.json", report.to_json() + "\n");
  }
  out << "AP " << percent(report.ap_person) << "% (clean " << percent(report.ap_clean) << "%) over "
      << scenes.size() << " scenes, " << report.detector_queries << " detector queries\n";
  return kExitOk;
}

int cmd_serve_check(const RunConfig& cfg, std::ostream& out) {
  if (cfg.detector.endpoint.empty()) throw InvalidArgument("serve-check: --detector-endpoint is required");
  HttpEndpoint ep(cfg.detector.endpoint, cfg.detector.http);
  const json health = ep.get("/health");
  out << "health: " << health.dump() << "\n";

  DetectorSpec ds = cfg.detector;
  ds.kind = OracleKind::external;
  const auto det = make_detector(ds);
  CorpusSpec cs = cfg.corpus;
  cs.count = 1;
  cs.image_width = ds.input_width;
  cs.image_height = ds.input_height;
  const Scene scene = generate_corpus(cs).front();
  const auto dets = det->detect(scene.image);
  out << "detect: " << dets.size() << " detections, schema ok\n";

  if (!cfg.classifier.endpoint.empty()) {
    ClassifierSpec cls = cfg.classifier;
    cls.kind = OracleKind::external;
    const auto c = make_classifier(cls);
    const auto probs = c->classify(ImageBuffer(cls.input_width, cls.input_height, 0.5f));
    out << "classify: " << probs.size() << " probabilities, schema ok\n";
  }
  return kExitOk;
}

int report_error(std::ostream& err) {
  try {
    throw;
  } catch (const OracleUnavailable& e) {
    err << "oracle failure: " << e.what() << "\n";
    return kExitOracle;
  } catch (const InvalidFitness& e) {
    err << "oracle failure: " << e.what() << "\n";
    return kExitOracle;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidData& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace lp
