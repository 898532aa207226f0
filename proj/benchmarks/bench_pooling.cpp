// Copyright 2026 The reggap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <benchmark/benchmark.h>

#include "reggap/pooling.hpp"

namespace {

using namespace reggap;

FeatureMap random_map(std::size_t h, std::size_t w, std::size_t c) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureMap m(h, w, c);
  for (double& v : m.data()) v = u(gen);
  return m;
}

RegionMaskSet stripe_masks(std::size_t h, std::size_t w) {
  RegionMaskSet m(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) m[kAllRegions[(y * 8) / h]].at(y, x) = 1.0;
  return m;
}

void BM_Gap(benchmark::State& state) {
  const FeatureMap f = random_map(32, 32, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gap(f));
}
BENCHMARK(BM_Gap)->Arg(512)->Arg(1792);

void BM_RegGap(benchmark::State& state) {
  const FeatureMap f = random_map(32, 32, static_cast<std::size_t>(state.range(0)));
  const RegionMaskSet m = stripe_masks(32, 32);
  for (auto _ : state) benchmark::DoNotOptimize(reg_gap(f, m));
}
BENCHMARK(BM_RegGap)->Arg(512)->Arg(1792);

}  // namespace
