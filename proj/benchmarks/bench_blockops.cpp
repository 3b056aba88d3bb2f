// Copyright 2026 The caddelag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <string>

#include <benchmark/benchmark.h>
#include <unistd.h>

#include "caddelag/blockops.hpp"
#include "caddelag/embedding.hpp"
#include "caddelag/sdd_solver.hpp"
#include "caddelag/synthgen.hpp"

namespace {

using namespace caddelag;
namespace fs = std::filesystem;

struct Workspace {
  fs::path dir;
  Runtime rt;
  MatrixHandle a;
  Workspace(std::size_t n, std::size_t p, std::size_t workers)
      : dir(fs::temp_directory_path() / ("caddelag_bench_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(n) + "_" + std::to_string(p))),
        rt((fs::remove_all(dir), dir), workers) {
    SyntheticSpec spec;
    spec.n = n;
    spec.block_size = p;
    spec.flip_prob = 0.0;
    a = generate_pair(rt, spec).a1;
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

// Args: n, p, workers.
void BM_Multiply(benchmark::State& state) {
  Workspace ws(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
               static_cast<std::size_t>(state.range(2)));
  for (auto _ : state) {
    const MatrixHandle c = multiply(ws.rt, ws.a, ws.a);
    state.PauseTiming();
    remove_matrix(c);
    state.ResumeTiming();
  }
  state.counters["blocks_read"] = static_cast<double>(ws.rt.history().back().blocks_read);
}
BENCHMARK(BM_Multiply)
    ->Args({500, 23, 1})
    ->Args({500, 23, 4})
    ->Args({1000, 32, 1})
    ->Args({1000, 32, 4})
    ->Unit(benchmark::kMillisecond);

void BM_Matvec(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Workspace ws(n, static_cast<std::size_t>(state.range(1)), 1);
  const DenseVector x(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(matvec(ws.rt, ws.a, x));
}
BENCHMARK(BM_Matvec)->Args({1000, 32})->Args({1000, 100})->Unit(benchmark::kMillisecond);

void BM_ChainProduct(benchmark::State& state) {
  Workspace ws(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 1);
  const MatrixHandle l = laplacian(ws.rt, ws.a);
  for (auto _ : state) {
    const auto pc = chain_product(ws.rt, l, static_cast<std::size_t>(state.range(2)), ChainSplit::kStandard,
                                  ws.rt.temp_name("chain"));
    state.PauseTiming();
    fs::remove_all(pc.dir);
    state.ResumeTiming();
  }
}
BENCHMARK(BM_ChainProduct)->Args({500, 23, 3})->Unit(benchmark::kMillisecond);

void BM_ProjectIncidence(benchmark::State& state) {
  Workspace ws(static_cast<std::size_t>(state.range(0)), 32, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(project_incidence(ws.rt, ws.a, 1, static_cast<std::size_t>(state.range(1))));
}
BENCHMARK(BM_ProjectIncidence)->Args({1000, 15})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
