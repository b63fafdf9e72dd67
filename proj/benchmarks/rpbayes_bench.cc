// Copyright 2026 The rpbayes Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include "rpbayes/bayesmean.h"
#include "rpbayes/bayesreg.h"
#include "rpbayes/model.h"
#include "rpbayes/numerics.h"
#include "rpbayes/privacy.h"
#include "rpbayes/robustmean.h"

namespace rpbayes {
namespace {

MeanDataset Gaussian(int n, int d, RngStream& rng) {
  MeanDataset data;
  data.samples.resize(n, d);
  for (int i = 0; i < n; ++i) data.samples.row(i) = rng.NormalVector(d).transpose();
  return data;
}

void BM_SymEig(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  RngStream rng(1, 0);
  Matrix g(d, d);
  for (int j = 0; j < d; ++j) g.col(j) = rng.NormalVector(d);
  const SymMatrix m = SymMatrix::Symmetrize(g * g.transpose());
  for (auto _ : state) benchmark::DoNotOptimize(SymEig(m));
}
BENCHMARK(BM_SymEig)->Arg(5)->Arg(20)->Arg(50);

void BM_RobustMeanFilter(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = 20;
  const double eta = 0.05;
  RngStream rng(2, 0);
  AdversarySpec adv;
  adv.kind = AdversaryKind::kMixturePlant;
  adv.delta = 3.0;
  adv.direction = Vector::Unit(d, 0);
  const ContaminatedMean obs = *Corrupt(Gaussian(n, d, rng), adv, eta, rng);
  for (auto _ : state) benchmark::DoNotOptimize(RobustMeanFilter(obs.observed, eta));
}
BENCHMARK(BM_RobustMeanFilter)->Arg(400)->Arg(2000);

void BM_MeanScoreField(benchmark::State& state) {
  RngStream rng(3, 0);
  const MeanDataset data = Gaussian(static_cast<int>(state.range(0)), 2, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(MeanScoreField(data, 2.0, 0.05, 1.0, MeanMode::kEff));
  }
}
BENCHMARK(BM_MeanScoreField)->Arg(500)->Arg(2000);

void BM_PrivatePosteriorMean(benchmark::State& state) {
  RngStream rng(4, 0);
  const int n = 1000, d = static_cast<int>(state.range(0));
  const PriorSpec prior = *PriorSpec::Isotropic(d, 1.0);
  const MeanInstance inst = *SampleMeanInstance(prior, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        PrivatePosteriorMean(inst.data, prior, 1.0, 0.05, MeanMode::kEff, rng));
  }
}
BENCHMARK(BM_PrivatePosteriorMean)->Arg(1)->Arg(2)->Arg(3);

RegressionDataset CorruptedRegression(int n, int d, double eta, RngStream& rng) {
  const RegressionInstance inst = SampleRegressionInstance(1.0, n, d, rng);
  AdversarySpec adv;
  adv.kind = AdversaryKind::kResponseReplace;
  adv.s = 1.0 / (1.0 - eta);
  return Corrupt(inst.data, adv, eta, rng)->observed;
}

void BM_WeakPriorPipeline(benchmark::State& state) {
  RngStream rng(5, 0);
  const RegressionDataset data =
      CorruptedRegression(static_cast<int>(state.range(0)), 10, 0.05, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(WeakPriorPipeline(data, 1.0, 0.05, 0.05));
  }
}
BENCHMARK(BM_WeakPriorPipeline)->Arg(1000)->Arg(3000);

void BM_TwoStagePosterior(benchmark::State& state) {
  RngStream rng(6, 0);
  const RegressionDataset data =
      CorruptedRegression(static_cast<int>(state.range(0)), 10, 0.05, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(TwoStagePosterior(data, 1.0, 0.05, 0.05));
  }
}
BENCHMARK(BM_TwoStagePosterior)->Arg(1000)->Arg(3000);

}  // namespace
}  // namespace rpbayes

BENCHMARK_MAIN();
