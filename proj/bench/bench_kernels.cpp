// OpenMP kernels against their serial references.
//
//   LATENTPATCH_THREADS=4 ./latentpatch_bench

#include <random>

#include <benchmark/benchmark.h>

#include "latentpatch/core/parallel.hpp"
#include "latentpatch/kernels.hpp"
#include "latentpatch/oracles/oracles.hpp"
#include "latentpatch/scenes/scenes.hpp"

using namespace lp;
using kernels::FeatureMap;

namespace {

FeatureMap random_map(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  FeatureMap m(c, h, w);
  for (float& v : m.data) v = u(gen);
  return m;
}

std::vector<float> random_weights(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> nd(0.0f, 0.2f);
  std::vector<float> w(n);
  for (float& v : w) v = nd(gen);
  return w;
}

template <bool Parallel>
void BM_conv3x3(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int cin = 16, cout = 16;
  const auto in = random_map(cin, side, side, 1);
  const auto w = random_weights(std::size_t(cout) * cin * 9, 2);
  const auto b = random_weights(cout, 3);
  for (auto _ : state) {
    auto out = Parallel ? kernels::conv3x3(in, w, b, cout) : kernels::conv3x3_reference(in, w, b, cout);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(side) * side * cin * cout * 9);
}
BENCHMARK(BM_conv3x3<true>)->Name("conv3x3/openmp")->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_conv3x3<false>)->Name("conv3x3/serial")->Arg(32)->Arg(64)->Arg(128);

kernels::CellTemplate random_template(int h, int w, std::uint64_t seed) {
  const auto raw = random_weights(std::size_t(3) * h * w, seed);
  return kernels::make_cell_template(h, w, std::vector<double>(raw.begin(), raw.end()));
}

enum class Match { openmp, serial, fft };

template <Match M>
void BM_match(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto cells = random_map(3, side, side, 4);
  const std::vector<kernels::CellTemplate> tpl{random_template(12, 6, 5)};
  const kernels::FftMatcher fft(side, side, tpl);
  for (auto _ : state) {
    if constexpr (M == Match::openmp) {
      benchmark::DoNotOptimize(kernels::match_score_map(cells, tpl[0]).data());
    } else if constexpr (M == Match::serial) {
      benchmark::DoNotOptimize(kernels::match_score_map_reference(cells, tpl[0]).data());
    } else {
      benchmark::DoNotOptimize(fft.score_maps(cells).data());
    }
  }
}
BENCHMARK(BM_match<Match::openmp>)->Name("match/openmp")->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_match<Match::serial>)->Name("match/serial")->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_match<Match::fft>)->Name("match/fft")->Arg(32)->Arg(64)->Arg(128);

void BM_toy_detect(benchmark::State& state) {
  CorpusSpec cs;
  cs.count = 1;
  const auto scene = generate_corpus(cs).front();
  const auto det = make_detector(DetectorSpec{});
  for (auto _ : state) benchmark::DoNotOptimize(det->detect(scene.image).size());
}
BENCHMARK(BM_toy_detect)->Name("toy_detector/256");

}  // namespace

int main(int argc, char** argv) {
  parallel::configure_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
