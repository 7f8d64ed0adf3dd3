/** Copyright 2026 The trajsearch Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * 	http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "trajsearch/csts.h"
#include "trajsearch/evalbench.h"
#include "trajsearch/segmentation.h"
#include "trajsearch/svti.h"

namespace {

using namespace trajsearch;

// Shared synthetic world; built once on first use.
struct Fixture {
  std::unique_ptr<SvtiIndex> index;
  std::vector<QueryStream> queries;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    SynthConfig sc;
    sc.seed = 3;
    sc.n_traj = 5000;
    sc.held_out = 20;
    SynthWorld w = synth_world(sc);
    Fixture out;
    out.queries = sample_queries(w.held_out, 10, 20, 8, 3);
    out.index = std::make_unique<SvtiIndex>(
        SvtiIndex::build(std::move(w.store), SegmentationConfig{}));
    return out;
  }();
  return f;
}

void BM_Partition(benchmark::State& state) {
  SynthConfig sc;
  sc.n_traj = 1;
  sc.min_len = sc.max_len = static_cast<std::size_t>(state.range(0));
  const SynthWorld w = synth_world(sc);
  const auto pts = w.store.trajectories().front().points();
  const SegmentationConfig cfg{30, static_cast<std::size_t>(state.range(1))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(partition(pts, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Partition)->Args({200, 50})->Args({2000, 50})->Args({2000, 100});

void BM_RangeAbsolute(benchmark::State& state) {
  const auto& f = fixture();
  std::size_t i = 0, hits = 0;
  for (auto _ : state) {
    const auto& q = f.queries[i % f.queries.size()];
    const auto r = f.index->range_query(q.stream[i % 20], static_cast<double>(state.range(0)));
    hits += r.hits.size();
    ++i;
  }
  state.counters["hits"] = benchmark::Counter(static_cast<double>(hits),
                                              benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_RangeAbsolute)->Arg(500)->Arg(2000)->Arg(5000);

void BM_RangeCandidateRate(benchmark::State& state) {
  const auto& f = fixture();
  const QueryConfig cfg = QueryConfig::rate(static_cast<double>(state.range(0)), 50);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& q = f.queries[i % f.queries.size()];
    benchmark::DoNotOptimize(f.index->range_query(q.stream[i % 20], cfg));
    ++i;
  }
}
BENCHMARK(BM_RangeCandidateRate)->Arg(5)->Arg(15)->Arg(25);

// One step of a continuous query; the session is replayed from its history
// outside the timed region every 20 steps.
void BM_Step(benchmark::State& state) {
  const auto& f = fixture();
  const Strategies masks[] = {Strategies::none(), {true, false, false}, {false, true, false},
                              {false, false, true}, Strategies::all()};
  const Strategies st = masks[state.range(0)];
  OtrdParams params;
  params.g = static_cast<std::size_t>(state.range(1));
  std::size_t qi = 0, i = 20;
  std::unique_ptr<QuerySession> s;
  for (auto _ : state) {
    if (i == 20) {
      state.PauseTiming();
      const auto& q = f.queries[qi++ % f.queries.size()];
      s = std::make_unique<QuerySession>(*f.index, q.destination, params, QueryConfig{}, st);
      for (const auto& p : q.history) s->observe(p);
      i = 0;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(s->step(f.queries[(qi - 1) % f.queries.size()].stream[i++]));
  }
  state.SetLabel(st.to_string() + " g=" + std::to_string(params.g));
}
BENCHMARK(BM_Step)
    ->Args({0, 1})->Args({1, 1})->Args({2, 1})->Args({3, 1})->Args({4, 1})
    ->Args({4, 3})->Args({4, 5})
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
