#include "latentpatch/core/error.hpp"
#include "latentpatch/oracles/toy_detector.hpp"
#include "latentpatch/oracles/wire.hpp"

namespace lp {

HttpDetector::HttpDetector(DetectorSpec spec)
    : Detector(std::move(spec)), endpoint_(this->spec().endpoint, this->spec().http) {}

std::vector<Detection> HttpDetector::run(const ImageBuffer& img) const {
  const std::string id = "det-" + std::to_string(next_id_.fetch_add(1));
  auto resp = endpoint_.post("/detect", wire::detect_request(id, img));
  std::vector<Detection> dets;
  try {
    dets = wire::parse_detect_response(resp, spec().num_classes);
  } catch (const InvalidData& e) {
    throw OracleUnavailable(endpoint_.url() + ": malformed response: " + e.what());
  }
  // The black-box contract: only candidates at or above threshold count.
  std::erase_if(dets, [&](const Detection& d) { return d.objectness < spec().score_threshold; });
  return dets;
}

HttpClassifier::HttpClassifier(ClassifierSpec spec)
    : Classifier(std::move(spec)), endpoint_(this->spec().endpoint, this->spec().http) {}

std::vector<double> HttpClassifier::run(const ImageBuffer& patch) const {
  const std::string id = "cls-" + std::to_string(next_id_.fetch_add(1));
  auto resp = endpoint_.post("/classify", wire::classify_request(id, patch));
  try {
    return wire::parse_classify_response(resp, spec().num_classes);
  } catch (const InvalidData& e) {
    throw OracleUnavailable(endpoint_.url() + ": malformed response: " + e.what());
  }
}

}  // namespace lp
