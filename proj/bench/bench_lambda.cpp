#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "ivm/enclosureness.hpp"
#include "ivm/enumeration.hpp"
#include "ivm/join_tree.hpp"
#include "ivm/workload.hpp"

using namespace ivm;

namespace {

struct Fixture {
  Query q;
  FreeConnexJoinTree tree;
  std::vector<Lifespan> spans;
};

// Random updates with deletions on the 4-hop chain, rooted at one end so every
// node has a long list of descendants.
const Fixture& fixture(std::size_t events) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(events);
  if (it != cache.end()) return it->second;
  Fixture f;
  f.q = validate(four_hop_spec());
  for (auto& t : enumerate_trees(f.q)) {
    if (t.height() == 4) {
      f.tree = t;
      break;
    }
  }
  std::mt19937_64 rng(5);
  RandomTraceOptions opt;
  opt.events = events;
  opt.domain = 50;
  opt.delete_fraction = 0.45;
  f.spans = lifespans(order_events(random_trace(f.q, opt, rng)));
  return cache.emplace(events, std::move(f)).first->second;
}

void BM_TreeLambda(benchmark::State& state, Exec exec) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tree_lambda(f.spans, f.tree, f.q, exec).total);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.spans.size()));
}

void BM_ClassicLambda(benchmark::State& state, Exec exec) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(classic_lambda(f.spans, exec).total);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.spans.size()));
}

void BM_EngineWindow3Hop(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto w = generate_workload({GraphQueryKind::ThreeHop, 3}, synthetic_graph(m, m / 2, 42), m / 10);
  const auto events = expand_events(w.query, w.trace);
  const auto tree = choose_plan_tree(w.query);
  for (auto _ : state) {
    Engine e(w.query, tree);
    std::uint64_t n = 0;
    for (const auto& ev : events) process_update(e, ev, [&](Sign, const Tuple&) { ++n; });
    benchmark::DoNotOptimize(n);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(events.size()));
}

}  // namespace

BENCHMARK_CAPTURE(BM_TreeLambda, serial, Exec::Serial)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TreeLambda, parallel, Exec::Parallel)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ClassicLambda, serial, Exec::Serial)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ClassicLambda, parallel, Exec::Parallel)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EngineWindow3Hop)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
