#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latentpatch/core/geometry.hpp"
#include "latentpatch/core/image.hpp"

namespace lp {

struct Scene {
  ImageBuffer image;
  std::vector<BBox> gt_boxes;  // persons
  std::string id;

  bool operator==(const Scene&) const = default;
};

enum class BackgroundKind { noise, gradient, tiles, mixed };

struct CorpusSpec {
  int count = 32;
  int image_width = 256;
  int image_height = 256;
  std::uint64_t seed = 0;
  BackgroundKind background = BackgroundKind::mixed;  // mixed cycles the other three
  int persons_per_scene = 1;
  double min_scale = 0.75;
  double max_scale = 1.25;
  // Aligned: scales are the detector pyramid levels inside [min_scale,
  // max_scale] and box corners sit on the detector's pixel grid. Otherwise
  // scale is uniform in the range and positions are arbitrary.
  bool grid_aligned = true;
  std::string id_prefix = "scene";

  void validate() const;
};

// Deterministic synthetic scenes. Persons are the fixed template figure at a
// random position and scale; gt boxes are the rendered extents. Images lie on
// the 8-bit grid so that PNG round trips are exact.
std::vector<Scene> generate_corpus(const CorpusSpec& spec);

// Writes {id}.png and {id}.json for every scene. Creates dir if needed.
void save_corpus(const std::filesystem::path& dir, const std::vector<Scene>& scenes);

struct LoadOptions {
  bool strict = false;  // missing sidecar: error instead of skip
};

struct LoadedCorpus {
  std::vector<Scene> scenes;
  std::vector<std::string> warnings;
};

// Loads every *.png in dir (sorted by filename) with its JSON sidecar
// {"persons": [{"x", "y", "w", "h"}]}. Throws ValidationError naming the file
// for malformed annotations or boxes outside the image.
LoadedCorpus load_corpus(const std::filesystem::path& dir, const LoadOptions& options = {});

struct SplitCorpus {
  std::vector<Scene> train;
  std::vector<Scene> eval;
};

// root/train and root/eval.
void save_split_corpus(const std::filesystem::path& root, const SplitCorpus& corpus);
SplitCorpus load_split_corpus(const std::filesystem::path& root, const LoadOptions& options = {});

}  // namespace lp
