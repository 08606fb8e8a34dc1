#include "latentpatch/oracles/oracles.hpp"

#include <cmath>
#include <string>

#include "latentpatch/core/error.hpp"
#include "latentpatch/oracles/toy_detector.hpp"

namespace lp {

void DetectorSpec::validate() const {
  if (input_width < 1 || input_height < 1) throw InvalidArgument("detector input size must be positive");
  if (!(score_threshold > 0.0 && score_threshold < 1.0)) {
    throw InvalidArgument("detector score_threshold must lie in (0,1)");
  }
  if (num_classes < 1) throw InvalidArgument("detector num_classes must be >= 1");
  if (person_class_index < 0 || person_class_index >= num_classes) {
    throw InvalidArgument("person_class_index out of range");
  }
  if (kind == OracleKind::external && endpoint.empty()) {
    throw InvalidArgument("external detector requires an endpoint");
  }
}

void ClassifierSpec::validate() const {
  if (num_classes < 2) throw InvalidArgument("classifier num_classes must be >= 2");
  if (target_class < 0 || target_class >= num_classes) {
    throw InvalidArgument("classifier target_class out of range");
  }
  if (input_width < 2 || input_height < 2) throw InvalidArgument("classifier input size too small");
  if (kind == OracleKind::external && endpoint.empty()) {
    throw InvalidArgument("external classifier requires an endpoint");
  }
}

Detector::Detector(DetectorSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

std::vector<Detection> Detector::detect(const ImageBuffer& img) const {
  if (img.width() != spec_.input_width || img.height() != spec_.input_height) {
    throw InvalidArgument("detector expects " + std::to_string(spec_.input_width) + "x" +
                          std::to_string(spec_.input_height) + " input, got " +
                          std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
  auto dets = run(img);
  queries_.fetch_add(1);
  return dets;
}

Classifier::Classifier(ClassifierSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

std::vector<double> Classifier::classify(const ImageBuffer& patch) const {
  if (patch.width() != spec_.input_width || patch.height() != spec_.input_height) {
    throw InvalidArgument("classifier expects " + std::to_string(spec_.input_width) + "x" +
                          std::to_string(spec_.input_height) + " input");
  }
  auto probs = run(patch);
  queries_.fetch_add(1);
  return probs;
}

std::unique_ptr<Detector> make_detector(const DetectorSpec& spec) {
  if (spec.kind == OracleKind::toy) return std::make_unique<ToyDetector>(spec);
  return std::make_unique<HttpDetector>(spec);
}

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec) {
  if (spec.kind == OracleKind::toy) return std::make_unique<ToyClassifier>(spec);
  return std::make_unique<HttpClassifier>(spec);
}

std::vector<Detection> detect_image(const Detector& detector, const ImageBuffer& img) {
  const auto& spec = detector.spec();
  if (img.width() == spec.input_width && img.height() == spec.input_height) return detector.detect(img);
  auto dets = detector.detect(resize_bilinear(img, spec.input_width, spec.input_height));
  const double sx = double(img.width()) / spec.input_width;
  const double sy = double(img.height()) / spec.input_height;
  for (auto& d : dets) d.bbox = {d.bbox.x * sx, d.bbox.y * sy, d.bbox.w * sx, d.bbox.h * sy};
  return dets;
}

}  // namespace lp
