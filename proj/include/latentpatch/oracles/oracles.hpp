#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "latentpatch/core/geometry.hpp"
#include "latentpatch/core/image.hpp"
#include "latentpatch/http.hpp"

namespace lp {

enum class OracleKind { toy, external };

struct DetectorSpec {
  OracleKind kind = OracleKind::toy;
  int input_width = 256;
  int input_height = 256;
  double score_threshold = 0.5;
  int person_class_index = 0;
  int num_classes = 3;
  std::string endpoint;
  HttpOptions http;

  void validate() const;
};

struct ClassifierSpec {
  OracleKind kind = OracleKind::toy;
  int num_classes = 10;
  int target_class = 0;
  int input_width = 64;
  int input_height = 64;
  std::uint64_t seed = 0;  // toy prototypes
  std::string endpoint;
  HttpOptions http;

  void validate() const;
};

struct QueryLedger {
  std::uint64_t detector_queries = 0;
  std::uint64_t classifier_queries = 0;
  std::uint64_t generator_queries = 0;

  QueryLedger operator+(const QueryLedger& o) const {
    return {detector_queries + o.detector_queries, classifier_queries + o.classifier_queries,
            generator_queries + o.generator_queries};
  }
  QueryLedger operator-(const QueryLedger& o) const {
    return {detector_queries - o.detector_queries, classifier_queries - o.classifier_queries,
            generator_queries - o.generator_queries};
  }
  bool operator==(const QueryLedger&) const = default;
};

// Query-only view of an object detector. detect() validates the input size,
// forwards to the implementation and counts the query on success.
class Detector {
 public:
  explicit Detector(DetectorSpec spec);
  virtual ~Detector() = default;

  std::vector<Detection> detect(const ImageBuffer& img) const;

  const DetectorSpec& spec() const { return spec_; }
  std::uint64_t queries() const { return queries_.load(); }

 protected:
  virtual std::vector<Detection> run(const ImageBuffer& img) const = 0;

 private:
  DetectorSpec spec_;
  mutable std::atomic<std::uint64_t> queries_{0};
};

class Classifier {
 public:
  explicit Classifier(ClassifierSpec spec);
  virtual ~Classifier() = default;

  // Probability vector of length num_classes.
  std::vector<double> classify(const ImageBuffer& patch) const;

  const ClassifierSpec& spec() const { return spec_; }
  std::uint64_t queries() const { return queries_.load(); }

 protected:
  virtual std::vector<double> run(const ImageBuffer& patch) const = 0;

 private:
  ClassifierSpec spec_;
  mutable std::atomic<std::uint64_t> queries_{0};
};

std::unique_ptr<Detector> make_detector(const DetectorSpec& spec);
std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec);

// detect() on an image of any size: resizes to the detector input when the
// sizes differ and maps the boxes back to image coordinates.
std::vector<Detection> detect_image(const Detector& detector, const ImageBuffer& img);

}  // namespace lp
