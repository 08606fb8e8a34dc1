#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latentpatch/core/error.hpp"
#include "latentpatch/core/parallel.hpp"
#include "latentpatch/harness/harness.hpp"

using namespace lp;

namespace {

template <class T>
std::map<std::string, T> names(std::initializer_list<std::pair<const std::string, T>> l) {
  return std::map<std::string, T>(l);
}

}  // namespace

int main(int argc, char** argv) {
  parallel::configure_from_env();

  RunConfig cfg;
  CLI::App app{"Black-box latent-space adversarial patch attacks on person detectors"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat config file (TOML/INI keys = long flag names); flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  // common
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> corpus_seed;
  int threads = 0;
  app.add_option("--seed", seed, "Run seed (ES, transforms, baselines, eval); corpus seed for 'corpus'");
  app.add_option("--out", cfg.output_dir, "Output directory");
  app.add_option("--corpus", cfg.corpus_dir, "Corpus directory (train/ and eval/); generated in memory when absent");
  app.add_option("--threads", threads, "Worker threads (default: LATENTPATCH_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  // corpus
  int image_size = cfg.corpus.image_width;
  app.add_option("--corpus-seed", corpus_seed, "Corpus seed");
  app.add_option("--count", cfg.corpus.count, "Scenes in the corpus, train + eval");
  app.add_option("--image-size", image_size, "Scene width and height in pixels");
  app.add_option("--background", cfg.corpus.background, "noise, gradient, tiles or mixed")
      ->transform(CLI::CheckedTransformer(names<BackgroundKind>({{"noise", BackgroundKind::noise},
                                                                  {"gradient", BackgroundKind::gradient},
                                                                  {"tiles", BackgroundKind::tiles},
                                                                  {"mixed", BackgroundKind::mixed}})))
      ->option_text("KIND");
  app.add_option("--persons", cfg.corpus.persons_per_scene, "Persons per scene");

  // optimizer
  app.add_option("--pop", cfg.es.population, "ES population size n");
  app.add_option("--sigma", cfg.es.sigma, "ES perturbation scale");
  app.add_option("--lr", cfg.es.lr, "Adam learning rate");
  app.add_option("--tau", cfg.es.tau, "Latent box bound");
  app.add_option("--iters", cfg.es.max_iters, "Maximum ES iterations");
  app.add_option("--patience", cfg.es.plateau_patience, "Plateau patience in epochs");
  app.add_option("--lr-min", cfg.es.lr_min, "Learning-rate floor");
  app.add_flag("--antithetic,!--no-antithetic", cfg.es.antithetic, "Mirrored perturbation pairs");
  app.add_option("--shaping", cfg.es.shaping, "standardize or none")
      ->transform(CLI::CheckedTransformer(
          names<FitnessShaping>({{"standardize", FitnessShaping::standardize}, {"none", FitnessShaping::none}})))
      ->option_text("KIND");
  app.add_option("--latent-dim", cfg.generator.latent_dim, "Generator latent dimension");
  app.add_option("--generator-seed", cfg.generator.seed, "Toy generator weights seed");
  app.add_option("--batch", cfg.batch, "Training scenes per iteration (0 = all)");
  app.add_flag("--resume", cfg.resume, "Resume from OUT/checkpoint.json");
  app.add_option("--checkpoint-every", cfg.checkpoint_every, "Checkpoint interval in iterations");

  // loss
  std::vector<double> lambda_cls;
  std::vector<std::string> det_modes;
  std::string det_mode;
  app.add_option("--lambda-tv", cfg.weights.lambda_tv, "TV weight");
  app.add_option("--lambda-cls", lambda_cls, "Classifier-guidance weight (comma list for ablate)")->delimiter(',');
  app.add_option("--det-mode", det_mode, "obj_times_cls or obj_only");
  app.add_option("--det-modes", det_modes, "det_mode grid for ablate")->delimiter(',');
  app.add_option("--tv-norm", cfg.weights.tv_normalization, "mean or sum")
      ->transform(CLI::CheckedTransformer(
          names<TvNormalization>({{"mean", TvNormalization::mean}, {"sum", TvNormalization::sum}})))
      ->option_text("KIND");

  // transform
  app.add_option("--rot", cfg.transform.rot_range, "Rotation range in degrees (+/-)");
  app.add_option("--brightness", cfg.transform.brightness_range, "Brightness range (+/-)");
  app.add_option("--scale-min", cfg.transform.scale_min, "Minimum patch scale jitter");
  app.add_option("--scale-max", cfg.transform.scale_max, "Maximum patch scale jitter");
  app.add_option("--patch-fraction", cfg.transform.patch_area_fraction, "Patch area as a fraction of the box");

  // external oracles
  double http_timeout = cfg.detector.http.timeout_seconds;
  int http_attempts = cfg.detector.http.attempts;
  app.add_option("--detector-endpoint", cfg.detector.endpoint, "External detector base URL");
  app.add_option("--classifier-endpoint", cfg.classifier.endpoint, "External classifier base URL");
  app.add_option("--generator-endpoint", cfg.generator.endpoint, "External generator base URL");
  app.add_option("--http-timeout", http_timeout, "Per-request timeout in seconds");
  app.add_option("--http-attempts", http_attempts, "Attempts per request");

  // eval
  std::string patch_png;
  app.add_option("--iou", cfg.eval.iou_threshold, "IoU threshold for AP");
  app.add_flag("--eval-random", cfg.eval.randomized, "Random transforms at evaluation");
  app.add_option("--patch", patch_png, "Patch PNG for 'eval'");

  // compare / ablate
  std::vector<std::string> methods;
  app.add_option("--budget", cfg.baseline.budget, "Detector-query budget for compare");
  app.add_option("--methods", methods, "ours, latent_rs, pixel_rs, square, pixel_nes")->delimiter(',');
  app.add_option("--latent-sigma", cfg.baseline.latent_sigma, "latent_rs proposal scale");
  app.add_option("--block-fraction", cfg.baseline.block_fraction, "Initial block area fraction (pixel_rs, square)");
  app.add_option("--nes-sigma", cfg.baseline.nes_sigma, "pixel_nes perturbation scale");
  app.add_option("--nes-lr", cfg.baseline.nes_lr, "pixel_nes learning rate");
  app.add_option("--pops", cfg.pops, "Population grid for ablate")->delimiter(',');
  app.add_flag("--svg,!--no-svg", cfg.svg, "Write loss.svg");

  auto* sub_corpus = app.add_subcommand("corpus", "Generate a train/eval toy corpus");
  auto* sub_attack = app.add_subcommand("attack", "Run the latent ES attack");
  auto* sub_compare = app.add_subcommand("compare", "Attack and baselines at equal query budget");
  auto* sub_ablate = app.add_subcommand("ablate", "Sweep pop x lambda_cls x det_mode");
  auto* sub_eval = app.add_subcommand("eval", "Evaluate a patch on the eval split");
  auto* sub_serve = app.add_subcommand("serve-check", "Ping an external oracle and check its schema");
  for (auto* s : app.get_subcommands({})) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (threads > 0) parallel::set_threads(threads);
    const bool grid = sub_ablate->parsed();

    cfg.es.seed = seed;
    cfg.baseline.seed = seed;
    cfg.eval.seed = seed;
    cfg.corpus.seed = corpus_seed ? *corpus_seed : (sub_corpus->parsed() ? seed : 0);
    cfg.corpus.image_width = cfg.corpus.image_height = image_size;
    if (!cfg.detector.endpoint.empty()) cfg.detector.kind = OracleKind::external;
    if (!cfg.classifier.endpoint.empty()) cfg.classifier.kind = OracleKind::external;
    if (!cfg.generator.endpoint.empty()) cfg.generator.kind = GeneratorKind::external;
    for (HttpOptions* h : {&cfg.detector.http, &cfg.classifier.http, &cfg.generator.http}) {
      h->timeout_seconds = http_timeout;
      h->attempts = http_attempts;
    }
    if (!methods.empty()) cfg.methods = methods;

    if (!lambda_cls.empty()) {
      if (grid) {
        cfg.lambda_cls = lambda_cls;
      } else if (lambda_cls.size() != 1) {
        throw InvalidArgument("--lambda-cls takes a single value outside 'ablate'");
      }
      cfg.weights.lambda_cls = lambda_cls.front();
    } else if (grid) {
      cfg.weights.lambda_cls = cfg.lambda_cls.front();
    }
    if (!det_mode.empty()) {
      auto m = parse_det_mode(det_mode);
      if (!m) throw InvalidArgument("unknown --det-mode '" + det_mode + "' (valid: obj_times_cls, obj_only)");
      cfg.weights.det_mode = *m;
      cfg.det_modes = {*m};
    }
    if (!det_modes.empty()) {
      cfg.det_modes.clear();
      for (const auto& s : det_modes) {
        auto m = parse_det_mode(s);
        if (!m) throw InvalidArgument("unknown det mode '" + s + "' (valid: obj_times_cls, obj_only)");
        cfg.det_modes.push_back(*m);
      }
    }

    if (sub_corpus->parsed()) return cmd_corpus(cfg, std::cout);
    if (sub_attack->parsed()) return cmd_attack(cfg, std::cout);
    if (sub_compare->parsed()) return cmd_compare(cfg, std::cout);
    if (sub_ablate->parsed()) return cmd_ablate(cfg, std::cout);
    if (sub_eval->parsed()) return cmd_eval(cfg, patch_png, std::cout);
    if (sub_serve->parsed()) return cmd_serve_check(cfg, std::cout);
    return kExitUsage;
  } catch (...) {
    return report_error(std::cerr);
  }
}
