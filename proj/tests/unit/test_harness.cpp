#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ivm/error.hpp"
#include "ivm/io.hpp"
#include "ivm/oracle.hpp"
#include "ivm/runner.hpp"
#include "ivm/workload.hpp"
#include "support/fixtures.hpp"

using namespace ivm;
using namespace ivm::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::ParseError;
}

OracleState running_example_oracle(const Query& q) {
  OracleState s(q);
  for (const auto& ev : running_example_contents()) s.apply(ev);
  return s;
}

std::string run_text(const Query& q, const std::vector<UpdateEvent>& trace, RunOptions opt, RunReport* report = nullptr) {
  std::ostringstream os;
  opt.out = &os;
  const RunReport r = run(q, trace, opt);
  if (report) *report = r;
  return os.str();
}

}  // namespace

TEST(Oracle, RunningExample) {
  const Query q = four_hop();
  OracleState s = running_example_oracle(q);
  EXPECT_EQ(oracle_query(s, q), (std::set<Tuple>{T({1, 2, 4, 4}), T({2, 2, 4, 4})}));
  EXPECT_EQ(s.total_tuples(), 18u);
  const auto d1 = oracle_delta(s, ins("R1", T({1, 1})), q);
  EXPECT_EQ(d1.sign, Sign::Insert);
  EXPECT_EQ(d1.tuples, (std::set<Tuple>{T({1, 1, 1, 1}), T({1, 1, 1, 2}), T({1, 1, 4, 4})}));
  const auto d2 = oracle_delta(s, del("R4", T({1, 1})), q);
  EXPECT_EQ(d2.tuples, std::set<Tuple>{T({1, 1, 1, 1})});
  EXPECT_TRUE(oracle_delta(s, del("R4", T({1, 1})), q).tuples.empty());
}

TEST(Oracle, EmptyRelations) {
  const Query q = four_hop();
  OracleState s(q);
  EXPECT_TRUE(oracle_query(s, q).empty());
  EXPECT_EQ(code_of([&] { s.apply(ins("R7", T({1}))); }), ErrorCode::UnknownRelation);
}

TEST(Oracle, AgreesWithEngineOnGraphInstance) {
  const auto w = generate_workload({GraphQueryKind::ThreeHop, 3}, synthetic_graph(50, 12, 9), std::nullopt);
  OracleState s(w.query);
  Engine e(w.query, choose_plan_tree(w.query));
  for (const auto& ev : expand_events(w.query, w.trace)) {
    s.apply(ev);
    run_update(e, ev);
  }
  const auto results = oracle_query(s, w.query);
  EXPECT_FALSE(results.empty());
  EXPECT_EQ(all_results(e), results);
}

TEST(TraceIo, ParsesEventsAndTimestamps) {
  const Query q = four_hop();
  const auto evs = parse_trace("# c\n+,R1,1,2\n\n-,R2,3,x,17\n+,R4,5,NULL\n", q);
  ASSERT_EQ(evs.size(), 3u);
  EXPECT_EQ(evs[0].timestamp, 0);
  EXPECT_EQ(evs[1].sign, Sign::Delete);
  EXPECT_EQ(evs[1].tuple, (Tuple{Value::integer(3), Value::string("x")}));
  EXPECT_EQ(evs[1].timestamp, 17);
  EXPECT_EQ(evs[2].timestamp, 2);
  EXPECT_TRUE(evs[2].tuple[1].is_null());
}

TEST(TraceIo, RoundTrips) {
  const Query q = four_hop();
  std::mt19937_64 rng(1);
  const auto trace = random_trace(q, {}, rng);
  std::ostringstream os;
  write_trace(os, trace);
  const auto back = parse_trace(os.str(), q);
  ASSERT_EQ(back.size(), trace.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].relation, trace[i].relation);
    EXPECT_EQ(back[i].tuple, trace[i].tuple);
    EXPECT_EQ(back[i].sign, trace[i].sign);
    EXPECT_EQ(back[i].timestamp, trace[i].timestamp);
  }
}

TEST(TraceIo, Errors) {
  const Query q = four_hop();
  EXPECT_EQ(code_of([&] { parse_trace("*,R1,1,2\n", q); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { parse_trace("+,R1,1\n", q); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { parse_trace("+,R1,1,2,3,4\n", q); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { parse_trace("+,R1,1,2,t\n", q); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { parse_trace("+,Q,1,2\n", q); }), ErrorCode::UnknownRelation);
  EXPECT_EQ(delta_line(Sign::Delete, T({1, 2})), "-,1,2");
}

TEST(GraphIo, EdgeLists) {
  const auto edges = parse_edge_list("# comment\n% other\n1 2\n3\t4\n\n");
  EXPECT_EQ(edges, (std::vector<Edge>{{1, 2}, {3, 4}}));
  EXPECT_EQ(code_of([] { parse_edge_list("1 2 3\n"); }), ErrorCode::BadGraphFile);
  EXPECT_EQ(code_of([] { parse_edge_list("1 x\n"); }), ErrorCode::BadGraphFile);
  EXPECT_EQ(code_of([] { read_edge_list("/nonexistent/graph.txt"); }), ErrorCode::BadGraphFile);
}

TEST(Workload, SyntheticGraphIsDistinctAndSeeded) {
  const auto a = synthetic_graph(500, 100, 3);
  EXPECT_EQ(a.size(), 500u);
  EXPECT_EQ(std::set<Edge>(a.begin(), a.end()).size(), 500u);
  EXPECT_EQ(a, synthetic_graph(500, 100, 3));
  EXPECT_NE(a, synthetic_graph(500, 100, 4));
}

TEST(Workload, GraphQueryShapes) {
  EXPECT_EQ(parse_graph_query_kind("chain-5").hops, 5);
  EXPECT_EQ(parse_graph_query_kind("4hop-projected").kind, GraphQueryKind::FourHopProjected);
  EXPECT_THROW(parse_graph_query_kind("5hop"), Error);
  const Query star = validate(graph_query({GraphQueryKind::Star, 4}));
  EXPECT_TRUE(classify(star).q_hierarchical);
  const Query proj = validate(graph_query({GraphQueryKind::FourHopProjected, 4}));
  EXPECT_EQ(proj.output.size(), 3u);
  EXPECT_TRUE(classify(validate(graph_query({GraphQueryKind::FourHop, 4}))).free_connex);
}

TEST(Workload, FanOutAndFilterPushdown) {
  const Query q = validate(graph_query({GraphQueryKind::ThreeHop, 3}, 5));
  const auto phys = expand_events(q, {ins("G", T({1, 7})), ins("G", T({1, 2}))});
  // The filter sits on one copy only, so (1,7) reaches two copies and (1,2) all three.
  EXPECT_EQ(phys.size(), 5u);
  for (const auto& ev : phys) EXPECT_NE(ev.relation, "G");
  EXPECT_EQ(logical_relations(q), std::vector<std::string>{"G"});
}

TEST(Workload, WindowStreamShape) {
  const auto edges = synthetic_graph(30, 20, 5);
  const auto evs = window_stream(edges, 10);
  std::size_t deletes = 0;
  for (const auto& e : evs) deletes += e.sign == Sign::Delete;
  EXPECT_EQ(deletes, 20u);
  EXPECT_EQ(evs.size(), 50u);
  const auto w = generate_workload({GraphQueryKind::ThreeHop, 3}, edges, 10, 0.5);
  EXPECT_EQ(w.trace.size(), 50u);
  EXPECT_FALSE(w.query.relations[2].filter.empty());
}

TEST(Workload, RandomTracesAreReproducible) {
  const Query q = four_hop();
  std::mt19937_64 a(9), b(9);
  const auto ta = random_trace(q, {}, a), tb = random_trace(q, {}, b);
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_EQ(ta[i].tuple, tb[i].tuple);
}

TEST(Runner, VerifiedDeltaRun) {
  const Query q = four_hop();
  std::mt19937_64 rng(10);
  RandomTraceOptions opt;
  opt.events = 200;
  RunOptions ro;
  ro.verify = true;
  ro.check_space = true;
  RunReport r;
  const std::string text = run_text(q, random_trace(q, opt, rng), ro, &r);
  EXPECT_TRUE(r.verified);
  EXPECT_EQ(r.mismatches, 0u) << r.first_mismatch;
  EXPECT_GE(r.checks, 200u);
  EXPECT_EQ(r.events, 200u);
  EXPECT_EQ(r.space_violations, 0u);
  EXPECT_NE(text.find("# event 199"), std::string::npos);
}

TEST(Runner, ProjectedQueryIsMasked) {
  const Query q = validate(two_path_spec({"x1", "x3"}));
  std::mt19937_64 rng(12);
  RunOptions ro;
  ro.verify = true;
  ro.mode = RunMode::Full;
  ro.full_every = 1;
  RunReport r;
  run_text(q, random_trace(q, {}, rng), ro, &r);
  EXPECT_EQ(r.added_output, "x2");
  EXPECT_EQ(r.mismatches, 0u) << r.first_mismatch;
  EXPECT_GT(r.full_enumerations, 100u);
}

TEST(Runner, FullModeOnEmptyTrace) {
  const Query q = four_hop();
  RunOptions ro;
  ro.mode = RunMode::Full;
  RunReport r;
  const std::string text = run_text(q, {}, ro, &r);
  EXPECT_EQ(r.full_enumerations, 1u);
  EXPECT_EQ(r.last_full_size, 0u);
  EXPECT_EQ(text, "# full 1\n");
}

TEST(Runner, AggregateModeVerifies) {
  QuerySpec s = four_hop_spec();
  s.output.clear();
  s.aggregate = AggregateSpec{RingKind::Counting, {}};
  const Query q = validate(s);
  std::mt19937_64 rng(14);
  RunOptions ro;
  ro.mode = RunMode::Aggregate;
  ro.verify = true;
  RunReport r;
  const std::string text = run_text(q, random_trace(q, {}, rng), ro, &r);
  EXPECT_EQ(r.mismatches, 0u) << r.first_mismatch;
  EXPECT_NE(text.find("# aggregate "), std::string::npos);
}

TEST(Runner, AggregateModeNeedsARing) {
  RunOptions ro;
  ro.mode = RunMode::Aggregate;
  EXPECT_THROW(run(four_hop(), {}, ro), Error);
}

TEST(Runner, OutputIsDeterministic) {
  const auto w = generate_workload({GraphQueryKind::ThreeHop, 3}, synthetic_graph(400, 60, 8), 40);
  RunOptions ro;
  const std::string a = run_text(w.query, w.trace, ro);
  const std::string b = run_text(w.query, w.trace, ro);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Runner, TreeIndexSelectsATree) {
  const Query q = four_hop();
  RunOptions ro;
  ro.tree_index = 0;
  const auto r = run(q, running_example_contents(), ro);
  EXPECT_EQ(r.tree, enumerate_trees(q).front().canonical(q));
  ro.tree_index = 10'000;
  EXPECT_THROW(run(q, {}, ro), Error);
}

TEST(Runner, MetricsAreKeyValueLines) {
  const auto r = run(four_hop(), running_example_contents(), {});
  std::ostringstream os;
  write_metrics(os, r);
  std::istringstream in(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    EXPECT_NE(line.find('='), std::string::npos) << line;
    ++lines;
  }
  EXPECT_GT(lines, 10);
  EXPECT_NE(os.str().find("events=18"), std::string::npos);
}
