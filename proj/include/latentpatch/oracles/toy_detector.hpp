#pragma once

#include <array>
#include <memory>
#include <vector>

#include "latentpatch/kernels.hpp"
#include "latentpatch/oracles/person_template.hpp"
#include "latentpatch/oracles/oracles.hpp"

namespace lp {

// Matched-filter person detector. The scene is box-averaged into 4x4 pixel
// cells and correlated against the detrended person template at three
// scales; a score of 1 means the window holds the figure exactly (up to a
// brightness plane). Every local peak is squashed to an objectness
//     sigmoid(kGain * (score - kOffset)).
// Peaks at or above the score threshold go through greedy NMS at IoU 0.45.
// Persons are expected on the 4 px grid at one of the template scales, as
// the corpus renderer places them.
class ToyDetector final : public Detector {
 public:
  static constexpr int kCell = kPersonGrid;
  static constexpr std::array<double, 3> kScales = kPersonScales;
  static constexpr double kNmsIou = 0.45;
  static constexpr double kPersonProb = 0.95;
  // Calibrated on generated corpora (3840 persons): clean persons reach
  // objectness >= 0.94, pure background <= 0.001, and the strongest
  // off-person peak (small template on a large person's upper body) stays
  // near 0.35.
  static constexpr double kGain = 14.0;
  static constexpr double kOffset = 0.64;

  explicit ToyDetector(DetectorSpec spec);

  static double objectness_from_score(double score);
  static kernels::FeatureMap to_cells(const ImageBuffer& img);
  const kernels::CellTemplate& cell_template(std::size_t scale_index) const {
    return templates_[scale_index];
  }

  // Raw score maps per scale, for calibration and tests.
  std::vector<std::vector<float>> score_maps(const ImageBuffer& img) const;

  // Same pipeline with the serial reference kernel, and with the OpenMP
  // direct correlation. run() uses the FFT matcher.
  std::vector<Detection> detect_reference(const ImageBuffer& img) const;
  std::vector<Detection> detect_direct(const ImageBuffer& img) const;

 protected:
  std::vector<Detection> run(const ImageBuffer& img) const override;

 private:
  std::vector<Detection> detections_from_maps(const kernels::FeatureMap& cells,
                                              const std::vector<std::vector<float>>& maps) const;

  std::vector<kernels::CellTemplate> templates_;
  std::unique_ptr<kernels::FftMatcher> fft_;
};

// Nearest-prototype classifier over a patch's mean color and texture energy;
// probabilities are a softmax over negative squared distances.
class ToyClassifier final : public Classifier {
 public:
  static constexpr double kTemperature = 0.05;
  static constexpr double kTextureWeight = 1.0;

  struct Prototype {
    std::array<double, 3> color;
    double texture;
  };

  explicit ToyClassifier(ClassifierSpec spec);

  const Prototype& prototype(int c) const { return prototypes_.at(c); }
  static std::array<double, 4> features(const ImageBuffer& patch);

 protected:
  std::vector<double> run(const ImageBuffer& patch) const override;

 private:
  std::vector<Prototype> prototypes_;
};

class HttpDetector final : public Detector {
 public:
  explicit HttpDetector(DetectorSpec spec);

 protected:
  std::vector<Detection> run(const ImageBuffer& img) const override;

 private:
  HttpEndpoint endpoint_;
  mutable std::atomic<std::uint64_t> next_id_{0};
};

class HttpClassifier final : public Classifier {
 public:
  explicit HttpClassifier(ClassifierSpec spec);

 protected:
  std::vector<double> run(const ImageBuffer& patch) const override;

 private:
  HttpEndpoint endpoint_;
  mutable std::atomic<std::uint64_t> next_id_{0};
};

}  // namespace lp
