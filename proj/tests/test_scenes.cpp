#include <doctest.h>

#include <fstream>

#include "latentpatch/core/error.hpp"
#include "latentpatch/eval/eval.hpp"
#include "latentpatch/oracles/oracles.hpp"
#include "latentpatch/scenes/scenes.hpp"
#include "support/reference.hpp"

using namespace lp;

namespace {

CorpusSpec small(std::uint64_t seed, int count = 6) {
  CorpusSpec s;
  s.count = count;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("corpus generation is deterministic and seed dependent") {
  auto a = generate_corpus(small(4));
  auto b = generate_corpus(small(4));
  auto c = generate_corpus(small(5));
  CHECK(a == b);
  REQUIRE(a.size() == 6);
  CHECK_FALSE(a[0].image == c[0].image);
  for (const auto& s : a) {
    CHECK(s.gt_boxes.size() == 1);
    CHECK(quantize_u8(s.image) == s.image);
    for (const auto& g : s.gt_boxes) {
      CHECK(g.x >= 0);
      CHECK(g.y >= 0);
      CHECK(g.x + g.w <= s.image.width());
      CHECK(g.y + g.h <= s.image.height());
    }
  }
}

TEST_CASE("every background kind renders") {
  for (auto kind : {BackgroundKind::noise, BackgroundKind::gradient, BackgroundKind::tiles}) {
    auto spec = small(7, 2);
    spec.background = kind;
    auto scenes = generate_corpus(spec);
    CHECK(scenes.size() == 2);
  }
}

TEST_CASE("scenes without persons give no detections") {
  auto spec = small(8, 4);
  spec.persons_per_scene = 0;
  auto det = make_detector(DetectorSpec{});
  for (const auto& s : generate_corpus(spec)) {
    CHECK(s.gt_boxes.empty());
    CHECK(det->detect(s.image).empty());
  }
}

TEST_CASE("clean corpus scores full AP") {
  auto scenes = generate_corpus(small(9, 16));
  auto det = make_detector(DetectorSpec{});
  auto r = evaluate_patch(scenes, std::nullopt, *det, EvalConfig{});
  CHECK(r.ap_clean == 1.0);
  CHECK(r.ap_person == 1.0);
}

TEST_CASE("corpus save and load round trip exactly") {
  ref::TempDir tmp("corpus_rt");
  auto scenes = generate_corpus(small(10, 5));
  save_corpus(tmp.path, scenes);
  auto loaded = load_corpus(tmp.path);
  CHECK(loaded.warnings.empty());
  REQUIRE(loaded.scenes.size() == scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    CHECK(loaded.scenes[i].image == scenes[i].image);
    REQUIRE(loaded.scenes[i].gt_boxes.size() == scenes[i].gt_boxes.size());
    CHECK(loaded.scenes[i].gt_boxes[0] == scenes[i].gt_boxes[0]);
  }

  SplitCorpus split{generate_corpus(small(11, 3)), generate_corpus(small(12, 2))};
  save_split_corpus(tmp.path / "split", split);
  auto back = load_split_corpus(tmp.path / "split");
  CHECK(back.train.size() == 3);
  CHECK(back.eval.size() == 2);
  CHECK(back.eval[1].image == split.eval[1].image);
}

TEST_CASE("malformed corpora are reported") {
  ref::TempDir tmp("corpus_bad");
  auto scenes = generate_corpus(small(13, 2));
  save_corpus(tmp.path, scenes);
  const auto sidecar = tmp.path / (scenes[0].id + ".json");

  SUBCASE("zero-width box names the file") {
    std::ofstream(sidecar) << R"({"persons": [{"x": 10, "y": 10, "w": 0, "h": 20}]})";
    try {
      load_corpus(tmp.path);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(sidecar.filename().string()) != std::string::npos);
    }
  }
  SUBCASE("box outside the image") {
    std::ofstream(sidecar) << R"({"persons": [{"x": 250, "y": 10, "w": 40, "h": 20}]})";
    CHECK_THROWS_AS(load_corpus(tmp.path), ValidationError);
  }
  SUBCASE("invalid json") {
    std::ofstream(sidecar) << "{persons";
    CHECK_THROWS_AS(load_corpus(tmp.path), ValidationError);
  }
  SUBCASE("missing key") {
    std::ofstream(sidecar) << R"({"persons": [{"x": 1, "y": 1, "w": 4}]})";
    CHECK_THROWS_AS(load_corpus(tmp.path), ValidationError);
  }
  SUBCASE("missing sidecar skips or fails when strict") {
    std::filesystem::remove(sidecar);
    auto loaded = load_corpus(tmp.path);
    CHECK(loaded.scenes.size() == 1);
    CHECK(loaded.warnings.size() == 1);
    CHECK_THROWS_AS(load_corpus(tmp.path, {true}), ValidationError);
  }
}

TEST_CASE("empty and missing corpus directories") {
  ref::TempDir tmp("corpus_empty");
  auto loaded = load_corpus(tmp.path);
  CHECK(loaded.scenes.empty());
  CHECK(loaded.warnings.size() == 1);
  CHECK_THROWS_AS(load_corpus(tmp.path / "nope"), InvalidArgument);
}

TEST_CASE("corpus spec validation") {
  CorpusSpec s;
  s.count = 0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = CorpusSpec{};
  s.persons_per_scene = -1;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = CorpusSpec{};
  s.min_scale = 2.0;
  s.max_scale = 1.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}
