#include "latentpatch/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "latentpatch/core/error.hpp"
#include "latentpatch/core/rng.hpp"
#include "latentpatch/losses/losses.hpp"

namespace lp {

double average_precision(std::span<const ScoredBox> predictions, std::span<const std::vector<BBox>> gt,
                         double iou_thr) {
  std::size_t total_gt = 0;
  for (const auto& g : gt) total_gt += g.size();
  if (total_gt == 0) throw InvalidArgument("average precision is undefined without ground truth");

  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].confidence > predictions[b].confidence;
  });

  std::vector<std::vector<bool>> used(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) used[i].assign(gt[i].size(), false);
  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& p = predictions[order[k]];
    if (p.image >= gt.size()) throw InvalidArgument("prediction refers to an unknown image");
    int best = -1;
    double best_iou = iou_thr;
    for (std::size_t j = 0; j < gt[p.image].size(); ++j) {
      if (used[p.image][j]) continue;
      const double v = iou(p.box, gt[p.image][j]);
      if (v >= best_iou) {
        best_iou = v;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0) {
      used[p.image][best] = true;
      ++tp;
    }
    precision.push_back(double(tp) / double(k + 1));
    recall.push_back(double(tp) / double(total_gt));
  }

  // Envelope from the right, then sum precision over recall steps.
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < recall.size(); ++k) {
    ap += (recall[k] - prev) * precision[k];
    prev = recall[k];
  }
  return ap;
}

void EvalConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) throw InvalidArgument("iou_threshold must lie in (0, 1)");
  transform.validate();
}

std::vector<ScoredBox> person_predictions(std::span<const Detection> dets, std::size_t image, int person_idx) {
  std::vector<ScoredBox> out;
  for (const auto& d : dets) {
    if (d.argmax_class() != person_idx) continue;
    out.push_back({image, d.bbox, d.objectness * d.class_probs[person_idx]});
  }
  return out;
}

EvalReport evaluate_patch(std::span<const Scene> corpus, const std::optional<ImageBuffer>& patch,
                          const Detector& detector, const EvalConfig& cfg) {
  cfg.validate();
  const int person = detector.spec().person_class_index;
  const TransformConfig tcfg = cfg.randomized ? cfg.transform : cfg.transform.without_jitter();
  const std::uint64_t before = detector.queries();

  const std::size_t n = corpus.size();
  std::vector<std::vector<ScoredBox>> clean(n), patched(n);
  std::vector<std::vector<BBox>> gt(n);
  EvalReport report;
  report.config = cfg;
  report.patched = patch.has_value();
  report.scenes.resize(n);
  std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const Scene& s = corpus[i];
      gt[i] = s.gt_boxes;
      PlacementScene ps{s.image, {}};
      const auto dets = detect_image(detector, s.image);
      clean[i] = person_predictions(dets, i, person);
      for (const auto& p : clean[i]) ps.boxes.push_back(p.box);

      ImageBuffer img = s.image;
      if (patch) {
        TransformParams params;
        if (cfg.randomized) {
          Rng rng(cfg.seed, stream_id(0xe7a1, i, 0));
          params = sample_transform(tcfg, rng);
        }
        img = patch_scene(ps, *patch, params, tcfg);
      }
      patched[i] = person_predictions(detect_image(detector, img), i, person);
      report.scenes[i] = {s.id, static_cast<int>(s.gt_boxes.size()), static_cast<int>(clean[i].size()),
                          static_cast<int>(patched[i].size())};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<ScoredBox> pool_clean, pool_patched;
  for (std::size_t i = 0; i < n; ++i) {
    pool_clean.insert(pool_clean.end(), clean[i].begin(), clean[i].end());
    pool_patched.insert(pool_patched.end(), patched[i].begin(), patched[i].end());
  }
  report.ap_clean = average_precision(pool_clean, gt, cfg.iou_threshold);
  report.ap_person = average_precision(pool_patched, gt, cfg.iou_threshold);
  report.detector_queries = detector.queries() - before;
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json scenes_j = nlohmann::json::array();
  for (const auto& s : scenes) {
    scenes_j.push_back({{"id", s.id}, {"gt", s.gt}, {"clean", s.clean}, {"patched", s.patched}});
  }
  nlohmann::json j = {
      {"ap_person", ap_person},
      {"ap_clean", ap_clean},
      {"patched", patched},
      {"detector_queries", detector_queries},
      {"config",
       {{"iou_threshold", config.iou_threshold},
        {"randomized", config.randomized},
        {"seed", config.seed},
        {"patch_area_fraction", config.transform.patch_area_fraction}}},
      {"scenes", scenes_j}};
  return j.dump(2);
}

}  // namespace lp
