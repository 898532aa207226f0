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

#include <vector>

#include <benchmark/benchmark.h>

#include "reggap/head.hpp"

namespace {

using namespace reggap;

void BM_HeadForward(benchmark::State& state) {
  HeadConfig c;
  c.input_dim = static_cast<std::size_t>(state.range(0));
  const HeadParams p = init_head(c);
  const std::vector<double> x(c.input_dim, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, x, false));
}
BENCHMARK(BM_HeadForward)->Arg(512)->Arg(1792);

void BM_HeadEpoch(benchmark::State& state) {
  HeadConfig c;
  c.input_dim = 512;
  HeadParams p = init_head(c);
  std::vector<LabeledEmbedding> data(256, LabeledEmbedding{std::vector<double>(512, 0.1), 25.0});
  std::size_t epoch = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_epoch(p, data, c, epoch++));
}
BENCHMARK(BM_HeadEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
