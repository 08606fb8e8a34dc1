#pragma once

// JSON bodies of the external oracle protocol:
//   POST /detect    {id, width, height, image_png_b64}
//                -> {detections: [{x, y, w, h, objectness, class_probs: [K]}]}
//   POST /classify  {id, image_png_b64} -> {probs: [K]}
//   POST /generate  {latent: [d], class_id?, width, height} -> {patch_png_b64}
// Coordinates are pixels, origin top-left.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "latentpatch/core/geometry.hpp"
#include "latentpatch/core/image.hpp"

namespace lp::wire {

nlohmann::json detect_request(const std::string& id, const ImageBuffer& img);
nlohmann::json detect_response(const std::vector<Detection>& dets);
// Throws InvalidData naming the offending field.
std::vector<Detection> parse_detect_response(const nlohmann::json& body, int num_classes);

nlohmann::json classify_request(const std::string& id, const ImageBuffer& patch);
nlohmann::json classify_response(const std::vector<double>& probs);
std::vector<double> parse_classify_response(const nlohmann::json& body, int num_classes);

nlohmann::json generate_response(const ImageBuffer& patch);

// Decodes image_png_b64 from a request body. Throws InvalidData.
ImageBuffer request_image(const nlohmann::json& body);

}  // namespace lp::wire
