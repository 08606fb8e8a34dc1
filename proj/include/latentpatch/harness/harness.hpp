#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "latentpatch/baselines/baselines.hpp"
#include "latentpatch/eval/eval.hpp"
#include "latentpatch/generator/generator.hpp"
#include "latentpatch/losses/losses.hpp"
#include "latentpatch/optimizer/es.hpp"
#include "latentpatch/scenes/scenes.hpp"
#include "latentpatch/transformer/transformer.hpp"

namespace lp {

// Everything a run needs. Commands validate it before the first query.
struct RunConfig {
  EsConfig es;
  LossWeights weights;
  TransformConfig transform;
  GeneratorSpec generator;
  DetectorSpec detector;
  ClassifierSpec classifier;
  CorpusSpec corpus{48};  // count is train + eval; a third goes to eval
  EvalConfig eval;
  BaselineSpec baseline;

  std::filesystem::path corpus_dir;  // empty: generate the corpus in memory
  std::filesystem::path output_dir;
  int batch = 0;                     // training scenes used, 0 = all
  bool resume = false;
  int checkpoint_every = 10;
  bool svg = true;

  // Grids for compare and ablate.
  std::vector<std::string> methods = {"ours", "latent_rs", "pixel_rs"};
  std::vector<int> pops = {50, 70, 90, 110};
  std::vector<double> lambda_cls = {0.1, 0.2};
  std::vector<DetMode> det_modes = {DetMode::obj_times_cls};

  void validate() const;
  nlohmann::json to_json() const;
};

std::string to_string(DetMode mode);
std::optional<DetMode> parse_det_mode(const std::string& s);

// count/3 eval scenes (at least 1), the rest train. The eval split uses its
// own seed stream.
SplitCorpus make_split_corpus(const CorpusSpec& spec);

// Clean AP of the person class on a corpus without patch. Throws
// InvariantViolation when a toy detector scores below 1.
double verify_clean(std::span<const Scene> scenes, const Detector& detector, const EvalConfig& eval,
                    std::ostream& log);

// epoch, total_loss, det_loss, tv_loss, cls_loss, lr, best_loss, detector_queries
void write_metrics_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);
// Total and detection loss against epoch as a standalone SVG line chart.
void write_loss_svg(const std::filesystem::path& path, std::span<const EpochRecord> history,
                    const std::string& title);

struct AttackSummary {
  std::string attack;
  double lambda_cls = 0.0;
  int population = 0;  // 0 for random search
  DetMode det_mode = DetMode::obj_times_cls;
  std::uint64_t queries = 0;  // training detector queries
  double ap = 0.0;            // eval AP with the saved patch
  double ap_clean = 0.0;
  double best_loss = 0.0;
  int iterations = 0;
  std::filesystem::path dir;
};

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitOracle = 3;
inline constexpr int kExitInternal = 4;

int cmd_corpus(const RunConfig& cfg, std::ostream& out);
int cmd_attack(const RunConfig& cfg, std::ostream& out);
int cmd_compare(const RunConfig& cfg, std::ostream& out);
int cmd_ablate(const RunConfig& cfg, std::ostream& out);
// Evaluates patch_png (or no patch when empty) on corpus_dir.
int cmd_eval(const RunConfig& cfg, const std::filesystem::path& patch_png, std::ostream& out);
int cmd_serve_check(const RunConfig& cfg, std::ostream& out);

// The attack behind cmd_attack, for one config into one directory.
AttackSummary run_attack_to_dir(const RunConfig& cfg, const SplitCorpus& corpus,
                                const std::filesystem::path& dir, std::ostream& out);

// Maps a caught exception to an exit code and prints it.
int report_error(std::ostream& err);

}  // namespace lp
