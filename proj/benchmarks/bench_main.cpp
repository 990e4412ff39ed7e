#include <benchmark/benchmark.h>

#include "cedr/cpcm.hpp"
#include "cedr/dataset.hpp"
#include "cedr/eaa.hpp"
#include "cedr/encoder.hpp"
#include "cedr/ops.hpp"
#include "cedr/scc_loss.hpp"

using namespace cedr;
using nn::Matrix;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

std::vector<int> cycling_labels(std::size_t n, std::size_t classes) {
  std::vector<int> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = static_cast<int>(i % classes);
  return l;
}

}  // namespace

static void BM_DenseForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix x = random_matrix(rng, n, 64), w = random_matrix(rng, 64, 128),
               b = random_matrix(rng, 1, 128);
  for (auto _ : state) benchmark::DoNotOptimize(nn::dense_forward(x, w, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_DenseForward)->Arg(256)->Arg(8192);

static void BM_EncodeBatch(benchmark::State& state) {
  DatasetOptions o;
  o.train_per_class = 4;
  o.test_per_class = 2;
  const DatasetSplit d = build_dataset(o);
  std::vector<std::size_t> idx(32);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const PointBatch batch = make_batch(d.train, idx);
  const Encoder enc(EncoderConfig{}, 0);
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(batch));
}
BENCHMARK(BM_EncodeBatch)->Unit(benchmark::kMillisecond);

static void BM_SupervisedInfonce(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Matrix z = nn::l2_normalize(random_matrix(rng, b, 128));
  const auto labels = cycling_labels(b, 8);
  const PairWeightMatrix w = cpcm_negative_weights(
      labels, class_pair_weights(compute_centers(z, labels, 8)), MiningMethod::all_pairs);
  for (auto _ : state) benchmark::DoNotOptimize(supervised_infonce(z, labels, &w, {}));
}
BENCHMARK(BM_SupervisedInfonce)->Arg(32)->Arg(80);
BENCHMARK_MAIN();
