#include <gtest/gtest.h>

#include <random>

#include "ivm/error.hpp"
#include "ivm/io.hpp"
#include "ivm/join_tree.hpp"
#include "ivm/query.hpp"
#include "ivm/workload.hpp"
#include "support/fixtures.hpp"
#include "support/random_query.hpp"

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

Query triangle() {
  return validate(spec_of({{"R", {"x1", "x2"}}, {"S", {"x2", "x3"}}, {"T", {"x3", "x1"}}}, {"x1", "x2", "x3"}));
}

}  // namespace

TEST(Validate, AcceptsFourHopWithProjection) {
  const Query q = four_hop();
  EXPECT_EQ(q.relations.size(), 4u);
  EXPECT_EQ(q.attr_names.size(), 5u);
  EXPECT_EQ(q.output.size(), 4u);
  EXPECT_FALSE(q.is_full());
}

TEST(Validate, RejectsUnknownOutputAttribute) {
  EXPECT_EQ(code_of([] { validate(spec_of({{"R", {"x1"}}}, {"x9"})); }), ErrorCode::MalformedQuery);
}

TEST(Validate, SingleRelationIsFullJoin) {
  const Query q = validate(spec_of({{"R", {"x1"}}}, {"x1"}));
  EXPECT_TRUE(q.is_full());
}

TEST(Validate, RejectsDuplicates) {
  EXPECT_EQ(code_of([] { validate(spec_of({{"R", {"x1"}}, {"R", {"x2"}}}, {})); }), ErrorCode::MalformedQuery);
  EXPECT_EQ(code_of([] { validate(spec_of({{"R", {"x1", "x1"}}}, {})); }), ErrorCode::MalformedQuery);
  EXPECT_EQ(code_of([] { validate(spec_of({{"R", {"x1"}}}, {"x1", "x1"})); }), ErrorCode::MalformedQuery);
}

TEST(Validate, RejectsBadFilterAndAnnotation) {
  QuerySpec s = spec_of({{"R", {"x1"}}}, {"x1"});
  s.relations[0].filter.push_back({"x2", CompareOp::Eq, Value::integer(1)});
  EXPECT_EQ(code_of([&] { validate(s); }), ErrorCode::MalformedQuery);
  s.relations[0].filter.clear();
  s.relations[0].annotation = 3;
  EXPECT_EQ(code_of([&] { validate(s); }), ErrorCode::MalformedQuery);
}

TEST(Validate, AggregateOutputFollowsGroupBy) {
  QuerySpec s = spec_of({{"R", {"x1", "x2"}}}, {});
  s.aggregate = AggregateSpec{RingKind::Counting, {"x2"}};
  const Query q = validate(s);
  ASSERT_EQ(q.output.size(), 1u);
  EXPECT_EQ(q.attr_names[q.output[0]], "x2");
  s.output = {"x1"};
  EXPECT_EQ(code_of([&] { validate(s); }), ErrorCode::MalformedQuery);
}

TEST(Selection, ComparatorsAndNulls) {
  QuerySpec s = spec_of({{"R", {"a", "b"}}}, {"a"});
  s.relations[0].filter = {{"a", CompareOp::Ge, Value::integer(2)}, {"b", CompareOp::IsNull, Value::null()}};
  const Query q = validate(s);
  const auto& r = q.relations[0];
  EXPECT_TRUE(r.accepts({Value::integer(2), Value::null()}));
  EXPECT_FALSE(r.accepts({Value::integer(1), Value::null()}));
  EXPECT_FALSE(r.accepts({Value::integer(3), Value::integer(0)}));
  EXPECT_FALSE(r.accepts({Value::null(), Value::null()}));
}

TEST(Selection, MixedTypesAreAnError) {
  QuerySpec s = spec_of({{"R", {"a"}}}, {"a"});
  s.relations[0].filter = {{"a", CompareOp::Lt, Value::integer(2)}};
  const Query q = validate(s);
  EXPECT_EQ(code_of([&] { q.relations[0].accepts({Value::string("x")}); }), ErrorCode::TypeMismatch);
}

TEST(Classify, StarIsQHierarchical) {
  const Query q = validate(graph_query({GraphQueryKind::Star, 4}));
  const QueryClass c = classify(q);
  EXPECT_TRUE(c.acyclic);
  EXPECT_TRUE(c.free_connex);
  EXPECT_TRUE(c.q_hierarchical);
}

TEST(Classify, FourHopIsFreeConnexNotQHierarchical) {
  const QueryClass c = classify(four_hop({"x1", "x2", "x3", "x4", "x5"}));
  EXPECT_TRUE(c.free_connex);
  EXPECT_FALSE(c.q_hierarchical);
}

TEST(Classify, TriangleIsCyclic) {
  EXPECT_FALSE(classify(triangle()).acyclic);
  EXPECT_FALSE(classify_by_definition(triangle()).acyclic);
}

TEST(Classify, ProjectedTwoPathIsNotFreeConnex) {
  const Query q = validate(two_path_spec({"x1", "x3"}));
  const QueryClass c = classify(q);
  EXPECT_TRUE(c.acyclic);
  EXPECT_FALSE(c.free_connex);
}

TEST(Classify, AgreesWithDefinitionOnRandomQueries) {
  std::mt19937_64 rng(2024);
  int free_connex = 0, hierarchical = 0, cyclic = 0;
  for (int i = 0; i < 600; ++i) {
    const Query q = validate(random_query_spec(rng));
    const QueryClass a = classify(q);
    const QueryClass b = classify_by_definition(q);
    ASSERT_EQ(a, b) << "query " << i << ": " << query_to_json(to_spec(q));
    EXPECT_TRUE(!a.q_hierarchical || a.free_connex);
    EXPECT_TRUE(!a.free_connex || a.acyclic);
    free_connex += a.free_connex;
    hierarchical += a.q_hierarchical;
    cyclic += !a.acyclic;
  }
  // The generator must exercise every class.
  EXPECT_GT(free_connex, 50);
  EXPECT_GT(hierarchical, 20);
  EXPECT_GT(cyclic, 10);
}

TEST(MakeFreeConnex, AddsTheJoinAttribute) {
  const Query q = validate(two_path_spec({"x1", "x3"}));
  const auto ext = make_free_connex(q);
  ASSERT_EQ(ext.added.size(), 1u);
  EXPECT_EQ(ext.query.attr_names[ext.added[0]], "x2");
  EXPECT_EQ(ext.query.output_set, q.all_attrs());
  EXPECT_EQ(ext.keep, (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(classify(ext.query).free_connex);
}

TEST(MakeFreeConnex, IdentityWhenAlreadyFreeConnex) {
  const Query q = four_hop();
  const auto ext = make_free_connex(q);
  EXPECT_TRUE(ext.added.empty());
  EXPECT_EQ(ext.query.output, q.output);
}

TEST(MakeFreeConnex, TriangleIsNotAcyclic) {
  EXPECT_EQ(code_of([] { make_free_connex(triangle()); }), ErrorCode::NotAcyclic);
}

TEST(MakeFreeConnex, RandomAcyclicQueriesBecomeFreeConnex) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    const Query q = validate(random_query_spec(rng));
    if (!classify(q).acyclic) continue;
    const auto ext = make_free_connex(q);
    EXPECT_TRUE(classify(ext.query).free_connex);
    EXPECT_TRUE(subset_of(q.output_set, ext.query.output_set));
    for (std::size_t k = 0; k < ext.keep.size(); ++k) EXPECT_EQ(ext.query.output[ext.keep[k]], q.output[k]);
  }
}

TEST(QueryJson, RoundTrips) {
  QuerySpec s = spec_of({{"R", {"a", "b"}}, {"S", {"b", "c"}}}, {"b"});
  s.relations[0].filter = {{"a", CompareOp::Lt, Value::integer(10)}, {"b", CompareOp::Ne, Value::string("z")}};
  s.relations[1].source = "E";
  s.relations[1].annotation = 1;
  s.aggregate = AggregateSpec{RingKind::IntSum, {"b"}};
  EXPECT_EQ(parse_query_json(query_to_json(s)), s);
}

TEST(QueryJson, RejectsMalformedDocuments) {
  EXPECT_EQ(code_of([] { parse_query_json("{"); }), ErrorCode::MalformedQuery);
  EXPECT_EQ(code_of([] { parse_query_json(R"({"output":[]})"); }), ErrorCode::MalformedQuery);
  EXPECT_EQ(code_of([] { parse_query_json(R"({"relations":[{"name":"R","attrs":[1]}]})"); }), ErrorCode::MalformedQuery);
  EXPECT_EQ(code_of([] { parse_query_json(R"({"relations":[{"name":"R","attrs":["a"],"filter":[{"attr":"a","op":"~","value":1}]}]})"); }),
            ErrorCode::MalformedQuery);
}

TEST(QueryModel, FanOutResolvesCopies) {
  const Query q = validate(graph_query({GraphQueryKind::ThreeHop, 3}));
  EXPECT_EQ(q.fan_out("G").size(), 3u);
  EXPECT_EQ(q.fan_out("G2"), (std::vector<std::size_t>{1}));
  EXPECT_TRUE(q.fan_out("H").empty());
}
