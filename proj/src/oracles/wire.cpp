#include "latentpatch/oracles/wire.hpp"

#include <cmath>

#include "latentpatch/core/base64.hpp"
#include "latentpatch/core/error.hpp"
#include "latentpatch/core/png_io.hpp"

namespace lp::wire {

using nlohmann::json;

namespace {

double number_field(const json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw InvalidData(std::string(where) + ": missing numeric field '" + key + "'");
  }
  double v = it->get<double>();
  if (!std::isfinite(v)) throw InvalidData(std::string(where) + ": non-finite '" + key + "'");
  return v;
}

std::vector<double> probability_array(const json& arr, int num_classes, const char* where) {
  if (!arr.is_array()) throw InvalidData(std::string(where) + ": expected an array");
  if (num_classes > 0 && static_cast<int>(arr.size()) != num_classes) {
    throw InvalidData(std::string(where) + ": expected " + std::to_string(num_classes) +
                      " probabilities, got " + std::to_string(arr.size()));
  }
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw InvalidData(std::string(where) + ": non-numeric probability");
    double p = v.get<double>();
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidData(std::string(where) + ": probability outside [0,1]");
    out.push_back(p);
  }
  return out;
}

}  // namespace

json detect_request(const std::string& id, const ImageBuffer& img) {
  return {{"id", id},
          {"width", img.width()},
          {"height", img.height()},
          {"image_png_b64", base64_encode(encode_png(img))}};
}

json detect_response(const std::vector<Detection>& dets) {
  json arr = json::array();
  for (const auto& d : dets) {
    arr.push_back({{"x", d.bbox.x},
                   {"y", d.bbox.y},
                   {"w", d.bbox.w},
                   {"h", d.bbox.h},
                   {"objectness", d.objectness},
                   {"class_probs", d.class_probs}});
  }
  return {{"detections", arr}};
}

std::vector<Detection> parse_detect_response(const json& body, int num_classes) {
  if (!body.is_object() || !body.contains("detections") || !body["detections"].is_array()) {
    throw InvalidData("detect response: missing 'detections' array");
  }
  std::vector<Detection> out;
  for (const auto& d : body["detections"]) {
    if (!d.is_object()) throw InvalidData("detect response: detection is not an object");
    Detection det;
    det.bbox = {number_field(d, "x", "detection"), number_field(d, "y", "detection"),
                number_field(d, "w", "detection"), number_field(d, "h", "detection")};
    if (!det.bbox.valid()) throw InvalidData("detect response: non-positive box size");
    det.objectness = number_field(d, "objectness", "detection");
    if (!(det.objectness >= 0.0 && det.objectness <= 1.0)) {
      throw InvalidData("detect response: objectness outside [0,1]");
    }
    if (!d.contains("class_probs")) throw InvalidData("detection: missing 'class_probs'");
    det.class_probs = probability_array(d["class_probs"], num_classes, "class_probs");
    out.push_back(std::move(det));
  }
  return out;
}

json classify_request(const std::string& id, const ImageBuffer& patch) {
  return {{"id", id}, {"image_png_b64", base64_encode(encode_png(patch))}};
}

json classify_response(const std::vector<double>& probs) { return {{"probs", probs}}; }

std::vector<double> parse_classify_response(const json& body, int num_classes) {
  if (!body.is_object() || !body.contains("probs")) {
    throw InvalidData("classify response: missing 'probs'");
  }
  auto probs = probability_array(body["probs"], num_classes, "probs");
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::abs(sum - 1.0) > 1e-6) throw InvalidData("classify response: probabilities do not sum to 1");
  return probs;
}

json generate_response(const ImageBuffer& patch) {
  return {{"patch_png_b64", base64_encode(encode_png(patch))}};
}

ImageBuffer request_image(const json& body) {
  if (!body.is_object() || !body.contains("image_png_b64") || !body["image_png_b64"].is_string()) {
    throw InvalidData("request: missing 'image_png_b64'");
  }
  return decode_png(base64_decode(body["image_png_b64"].get<std::string>()));
}

}  // namespace lp::wire
