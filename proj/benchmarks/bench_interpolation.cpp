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

#include "reggap/interpolation.hpp"

namespace {

using namespace reggap;

void BM_ResizeToAlignedGrid(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FeatureMap f(side, side, channels);
  for (double& v : f.data()) v = u(gen);
  const ResizeSpec spec{32, 32, ResizeKind::Biquartic};
  for (auto _ : state) benchmark::DoNotOptimize(resize_biquartic(f, spec));
}
// FaceNet and VGGFace activation grids.
BENCHMARK(BM_ResizeToAlignedGrid)->Args({3, 1792})->Args({14, 512});

void BM_ResizeMaskSet(benchmark::State& state) {
  RegionMaskSet m(512, 512);
  for (std::size_t y = 0; y < 512; ++y)
    for (std::size_t x = 0; x < 512; ++x) m[kAllRegions[(x * 8) / 512]].at(y, x) = 1.0;
  const ResizeSpec spec{32, 32, ResizeKind::Biquartic};
  for (auto _ : state) benchmark::DoNotOptimize(resize_mask_set(m, spec));
}
BENCHMARK(BM_ResizeMaskSet);

}  // namespace
