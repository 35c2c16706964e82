#include <benchmark/benchmark.h>

#include "cain/dataset.hpp"
#include "cain/embedder.hpp"
#include "cain/landmarks.hpp"
#include "cain/metrics.hpp"
#include "cain/model.hpp"

namespace {

void BM_CombineEmbeddings(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  torch::manual_seed(0);
  std::vector<std::pair<cain::SpatialEmbedding, cain::ResponsibilityMap>> pairs;
  for (int i = 0; i < K; ++i)
    pairs.push_back({{torch::randn({64, 16, 16})}, {torch::rand({64, 16, 16}) + 0.01}});
  for (auto _ : state) benchmark::DoNotOptimize(cain::combine_embeddings(pairs).values);
}
BENCHMARK(BM_CombineEmbeddings)->Arg(1)->Arg(8);

void BM_Synthesize(benchmark::State& state) {
  torch::set_num_threads(1);
  const int K = static_cast<int>(state.range(0));
  cain::ModelConfig mc;
  mc.embed_channels = 32;
  mc.gen_channels = 32;
  mc.gen_max_channels = 256;
  mc.disc_channels = 32;
  cain::CainModel model = cain::make_model(mc, 0);
  model.train(false);
  const auto seq = cain::generate_synthetic_identity(7, K + 1, 64);
  std::vector<torch::Tensor> frames, lms;
  for (int i = 0; i < K; ++i) {
    frames.push_back(seq.frames[i]);
    lms.push_back(cain::rasterize_landmarks(seq.landmarks[i], 64));
  }
  const auto target = cain::rasterize_landmarks(seq.landmarks[K], 64);
  torch::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(cain::synthesize(model, frames, lms, target, {}));
}
BENCHMARK(BM_Synthesize)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  torch::manual_seed(0);
  const auto a = torch::rand({3, res, res}) * 2 - 1, b = torch::rand({3, res, res}) * 2 - 1;
  for (auto _ : state) benchmark::DoNotOptimize(cain::ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(128);

void BM_RasterizeLandmarks(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  const auto seq = cain::generate_synthetic_identity(3, 2, res);
  for (auto _ : state) benchmark::DoNotOptimize(cain::rasterize_landmarks(seq.landmarks[0], res));
}
BENCHMARK(BM_RasterizeLandmarks)->Arg(64)->Arg(128);

}  // namespace
BENCHMARK_MAIN();
