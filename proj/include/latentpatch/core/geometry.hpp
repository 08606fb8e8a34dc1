#pragma once

#include <vector>

namespace lp {

// Axis-aligned box in pixels. Origin top-left, x right, y down.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }
  bool operator==(const BBox&) const = default;
};

double iou(const BBox& a, const BBox& b);

struct Detection {
  BBox bbox;
  double objectness = 0.0;
  std::vector<double> class_probs;

  // Index of the most probable class; -1 for an empty distribution.
  int argmax_class() const;
  bool operator==(const Detection&) const = default;
};

}  // namespace lp
