#include "latentpatch/core/geometry.hpp"

#include <algorithm>

namespace lp {

double iou(const BBox& a, const BBox& b) {
  double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  double uni = a.area() + b.area() - inter;
  if (a == b) return 1.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

int Detection::argmax_class() const {
  if (class_probs.empty()) return -1;
  return static_cast<int>(std::max_element(class_probs.begin(), class_probs.end()) -
                          class_probs.begin());
}

}  // namespace lp
