#include <gtest/gtest.h>

#include <random>
#include <stdexcept>

#include "ivm/error.hpp"
#include "ivm/oracle.hpp"
#include "ivm/workload.hpp"
#include "support/fixtures.hpp"

using namespace ivm;
using namespace ivm::testing;

namespace {

Engine running_example_engine() {
  const Query q = four_hop();
  Engine e(q, four_hop_tree(q));
  for (const auto& ev : running_example_contents()) run_update(e, ev);
  return e;
}

std::set<std::pair<int, Tuple>> witness_set(const std::vector<WitnessTuple>& ws) {
  std::set<std::pair<int, Tuple>> out;
  for (const auto& w : ws) out.emplace(w.node, w.tuple);
  return out;
}

// Nodes whose live view the engine maintains: the root, and connex nodes with a connex child.
bool maintains_live(const FreeConnexJoinTree& t, int id) {
  const auto& n = t.nodes[static_cast<std::size_t>(id)];
  if (n.parent < 0) return true;
  if (!n.in_connex) return false;
  return std::any_of(n.children.begin(), n.children.end(),
                     [&](int c) { return t.nodes[static_cast<std::size_t>(c)].in_connex; });
}

std::set<Tuple> live_from_results(const Engine& e, int id, const std::set<Tuple>& results) {
  const Query& q = e.query();
  const auto& n = e.tree().nodes[static_cast<std::size_t>(id)];
  const std::vector<AttrId> layout = n.kind == NodeKind::Input ? q.relations[n.relation].attrs : attrs_of(n.attrs);
  std::vector<int> pos;
  for (AttrId a : layout) {
    auto it = std::find(q.output.begin(), q.output.end(), a);
    if (it != q.output.end()) pos.push_back(static_cast<int>(it - q.output.begin()));
  }
  std::set<Tuple> out;
  for (const auto& r : results) out.insert(project(r, pos));
  return out;
}

}  // namespace

TEST(FullEnum, RunningExampleResults) {
  const Engine e = running_example_engine();
  EXPECT_EQ(all_results(e), (std::set<Tuple>{T({1, 2, 4, 4}), T({2, 2, 4, 4})}));
}

TEST(FullEnum, EmptyDatabase) {
  const Query q = four_hop();
  const Engine e(q, four_hop_tree(q));
  auto c = full_enum(e);
  EXPECT_FALSE(c.next().has_value());
}

TEST(FullEnum, BooleanQueryYieldsOneEmptyTuple) {
  const Query q = validate(two_path_spec({}));
  Engine e(q, choose_plan_tree(q));
  EXPECT_TRUE(all_results(e).empty());
  run_update(e, ins("R1", T({1, 2})));
  run_update(e, ins("R2", T({2, 3})));
  run_update(e, ins("R2", T({2, 4})));
  auto c = full_enum(e);
  auto first = c.next();
  ASSERT_TRUE(first.has_value());
  EXPECT_TRUE(first->empty());
  EXPECT_FALSE(c.next().has_value());
}

TEST(Witnesses, InsertionIntoLeaf) {
  Engine e = running_example_engine();
  const auto rec = e.apply(ins("R1", T({1, 1})));
  const auto ws = find_witnesses(e, rec);
  const int root = e.tree().root, r2 = e.node_of("R2");
  EXPECT_EQ(witness_set(ws), (std::set<std::pair<int, Tuple>>{{root, T({1})}, {r2, T({1, 4})}}));
  for (const auto& w : ws) EXPECT_EQ(w.kind, w.node == root ? WitnessKind::Root : WitnessKind::Midway);
  auto batch = delta_enum(e, rec, ws);
  EXPECT_EQ(batch.sign(), Sign::Insert);
  EXPECT_EQ(drain(batch), (std::set<Tuple>{T({1, 1, 1, 1}), T({1, 1, 1, 2}), T({1, 1, 4, 4})}));
  update_live_views(e, batch);
  EXPECT_FALSE(e.in_flight());
}

TEST(Witnesses, DeletionFromLeaf) {
  Engine e = running_example_engine();
  run_update(e, ins("R1", T({1, 1})));
  const auto rec = e.apply(del("R4", T({1, 1})));
  EXPECT_TRUE(e.in_flight());
  const auto ws = find_witnesses(e, rec);
  EXPECT_EQ(witness_set(ws), (std::set<std::pair<int, Tuple>>{{e.node_of("R3"), T({1, 1})}}));
  auto batch = delta_enum(e, rec, ws);
  EXPECT_EQ(batch.sign(), Sign::Delete);
  EXPECT_EQ(drain(batch), std::set<Tuple>{T({1, 1, 1, 1})});
  update_live_views(e, batch);
  EXPECT_EQ(all_results(e), (std::set<Tuple>{T({1, 2, 4, 4}), T({2, 2, 4, 4}), T({1, 1, 1, 2}), T({1, 1, 4, 4})}));
}

TEST(Witnesses, IgnoredUpdateHasNone) {
  Engine e = running_example_engine();
  const auto rec = e.apply(ins("R1", T({1, 2})));
  EXPECT_TRUE(rec.ignored);
  const auto ws = find_witnesses(e, rec);
  EXPECT_TRUE(ws.empty());
  auto batch = delta_enum(e, rec, ws);
  EXPECT_TRUE(drain(batch).empty());
  update_live_views(e, batch);
}

TEST(Witnesses, UpdateWithoutResultChangeHasNone) {
  Engine e = running_example_engine();
  // x4 = 9 joins nothing in R3.
  EXPECT_TRUE(run_update(e, ins("R4", T({9, 9}))).empty());
}

TEST(LiveViews, FollowTheRunningExample) {
  Engine e = running_example_engine();
  const int root = e.tree().root, r2 = e.node_of("R2"), r3 = e.node_of("R3");
  EXPECT_EQ(e.live(root), std::vector<Tuple>{T({4})});
  run_update(e, ins("R1", T({1, 1})));
  EXPECT_EQ(e.live(root), (std::vector<Tuple>{T({1}), T({4})}));
  EXPECT_EQ(e.live(r2), (std::vector<Tuple>{T({1, 1}), T({1, 4}), T({2, 4})}));
  EXPECT_EQ(e.live(r3), (std::vector<Tuple>{T({1, 1}), T({1, 2}), T({4, 4})}));
  run_update(e, del("R4", T({1, 1})));
  EXPECT_EQ(e.live(r3), (std::vector<Tuple>{T({1, 2}), T({4, 4})}));
  EXPECT_EQ(e.live(root), (std::vector<Tuple>{T({1}), T({4})}));
}

TEST(Cursor, InvalidatedByUpdate) {
  Engine e = running_example_engine();
  auto c = full_enum(e);
  Tuple t;
  ASSERT_TRUE(c.next(t));
  run_update(e, ins("R1", T({1, 1})));
  try {
    c.next(t);
    FAIL() << "expected CursorInvalidated";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::CursorInvalidated);
  }
}

TEST(Cursor, FullEnumRefusedMidUpdate) {
  Engine e = running_example_engine();
  const auto rec = e.apply(del("R1", T({1, 2})));
  try {
    full_enum(e);
    FAIL() << "expected UpdateInFlight";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::UpdateInFlight);
  }
  auto batch = delta_enum(e, rec, find_witnesses(e, rec));
  EXPECT_EQ(drain(batch), std::set<Tuple>{T({1, 2, 4, 4})});
  update_live_views(e, batch);
  EXPECT_EQ(all_results(e), std::set<Tuple>{T({2, 2, 4, 4})});
}

TEST(Cursor, StatsCountYields) {
  const Engine e = running_example_engine();
  auto c = full_enum(e);
  while (c.next()) {
  }
  EXPECT_EQ(c.stats().yields, 2u);
  EXPECT_GT(c.stats().max_ops, 0u);
}

TEST(LivelessEngine, DeltaEnumerationIsUnavailable) {
  const Query q = four_hop();
  Engine e(q, four_hop_tree(q), std::nullopt, false);
  const auto rec = e.apply(ins("R1", T({1, 2})));
  EXPECT_THROW(find_witnesses(e, rec), std::logic_error);
  EXPECT_THROW(delta_enum(e, rec, {}), std::logic_error);
  complete_update(e);
  EXPECT_FALSE(e.in_flight());
}

struct DeltaCase {
  const char* name;
  QuerySpec spec;
};

class DeltaOracle : public ::testing::TestWithParam<DeltaCase> {};

// Every delta equals the oracle's output change with no duplicates, live views
// equal the projections of the result, and full enumeration matches.
TEST_P(DeltaOracle, RandomTracesOnEveryTree) {
  const Query q = validate(GetParam().spec);
  const auto trees = enumerate_trees(q);
  std::mt19937_64 rng(17);
  for (std::size_t ti = 0; ti < trees.size() && ti < 6; ++ti) {
    for (int trace_no = 0; trace_no < 5; ++trace_no) {
      Engine e(q, trees[ti]);
      OracleState oracle(q);
      RandomTraceOptions opt;
      opt.events = 150;
      const auto events = expand_events(q, random_trace(q, opt, rng));
      for (std::size_t k = 0; k < events.size(); ++k) {
        const auto delta = run_update(e, events[k]);
        const auto expect = oracle_delta(oracle, events[k], q);
        const std::set<Tuple> got(delta.begin(), delta.end());
        ASSERT_EQ(got.size(), delta.size()) << "duplicate delta tuple at event " << k;
        ASSERT_EQ(got, expect.tuples) << "tree " << ti << " event " << k;
        const auto results = oracle_query(oracle, q);
        if (k % 10 == 0 || k + 1 == events.size()) ASSERT_EQ(all_results(e), results);
        for (std::size_t n = 0; n < trees[ti].nodes.size(); ++n) {
          if (!maintains_live(trees[ti], static_cast<int>(n))) continue;
          const auto live = e.live(static_cast<int>(n));
          ASSERT_EQ(std::set<Tuple>(live.begin(), live.end()), live_from_results(e, static_cast<int>(n), results))
              << "live view of node " << n << " after event " << k;
        }
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(
    Shapes, DeltaOracle,
    ::testing::Values(DeltaCase{"four_hop_full", [] {
                                  auto s = four_hop_spec();
                                  s.output.push_back("x5");
                                  return s;
                                }()},
                      DeltaCase{"four_hop", four_hop_spec()},
                      DeltaCase{"two_path_x2", two_path_spec({"x2"})},
                      DeltaCase{"boolean", two_path_spec({})},
                      DeltaCase{"three_hop", graph_query({GraphQueryKind::ThreeHop, 3})},
                      DeltaCase{"star", graph_query({GraphQueryKind::Star, 3})}),
    [](const auto& info) { return std::string(info.param.name); });
