#include <gtest/gtest.h>

#include <random>
#include <set>

#include "ivm/error.hpp"
#include "ivm/join_tree.hpp"
#include "support/fixtures.hpp"
#include "support/random_query.hpp"

using namespace ivm;
using namespace ivm::testing;

namespace {

FreeConnexJoinTree q1_t1(const Query& q) { return build_tree(q, {{"", {"x2"}, -1}, {"R1", {}, 0}, {"R2", {}, 1}}); }
FreeConnexJoinTree q1_t3(const Query& q) { return build_tree(q, {{"", {"x2"}, -1}, {"R1", {}, 0}, {"R2", {}, 0}}); }

bool contains_canonical(const std::vector<FreeConnexJoinTree>& trees, const std::string& c, const Query& q) {
  return std::any_of(trees.begin(), trees.end(), [&](const auto& t) { return t.canonical(q) == c; });
}

}  // namespace

TEST(VerifyTree, RunningExampleTreeIsValid) {
  const Query q = four_hop();
  const auto t = four_hop_tree(q);
  const auto check = verify_tree(t, q);
  EXPECT_TRUE(check.ok) << check.violation;
  EXPECT_EQ(t.height(), 2);
  EXPECT_EQ(t.generalized_count(), 1u);
}

TEST(VerifyTree, ReparentingBreaksConnectivity) {
  const Query q = four_hop();
  const auto t = build_tree(q, {{"", {"x3"}, -1}, {"R2", {}, 0}, {"R3", {}, 0}, {"R1", {}, 2}, {"R4", {}, 2}});
  const auto check = verify_tree(t, q);
  EXPECT_FALSE(check.ok);
  EXPECT_EQ(check.violation, "connect: x2");
}

TEST(VerifyTree, EmptyConnexSubtreeIsRejected) {
  const Query q = two_relation_q1();
  auto t = q1_t3(q);
  for (auto& n : t.nodes) n.in_connex = false;
  const auto check = verify_tree(t, q);
  EXPECT_FALSE(check.ok);
  EXPECT_EQ(check.violation.rfind("connex", 0), 0u) << check.violation;
}

TEST(VerifyTree, GuardAndAboveViolations) {
  const Query q = four_hop();
  // [x2] is not contained in R3.
  auto bad_guard = build_tree(q, {{"R2", {}, -1}, {"", {"x2"}, 0}, {"R1", {}, 1}, {"R3", {}, 0}, {"R4", {}, 3}});
  EXPECT_FALSE(verify_tree(bad_guard, q).ok);
  // Generalized node below an input node.
  auto bad_above = build_tree(q, {{"R2", {}, -1}, {"", {"x3"}, 0}, {"R3", {}, 1}, {"R1", {}, 0}, {"R4", {}, 2}});
  const auto check = verify_tree(bad_above, q);
  EXPECT_FALSE(check.ok);
  EXPECT_EQ(check.violation.rfind("above", 0), 0u) << check.violation;
}

TEST(VerifyTree, MissingRelationViolatesCover) {
  const Query q = four_hop();
  const auto t = build_tree(q, {{"", {"x3"}, -1}, {"R2", {}, 0}, {"R3", {}, 0}, {"R1", {}, 1}});
  const auto check = verify_tree(t, q);
  EXPECT_FALSE(check.ok);
  EXPECT_EQ(check.violation.rfind("cover", 0), 0u) << check.violation;
}

TEST(ScoreTree, CountsInputAncestorsOnly) {
  const Query q = two_relation_q1();
  EXPECT_EQ(score_tree(q1_t3(q), q), 0u);
  EXPECT_EQ(score_tree(q1_t1(q), q), 1u);
  EXPECT_EQ(score_tree(q1_t1(q), q, {{"R2", 7}}), 7u);
  EXPECT_EQ(score_tree(q1_t1(q), q, {{"R1", 7}}), 1u);
}

TEST(EnumerateTrees, TwoRelationQueryHasTheThreeTrees) {
  const Query q = two_relation_q1();
  const auto trees = enumerate_trees(q);
  EXPECT_TRUE(contains_canonical(trees, q1_t1(q).canonical(q), q));
  EXPECT_TRUE(contains_canonical(trees, q1_t3(q).canonical(q), q));
  const auto t2 = build_tree(q, {{"", {"x2"}, -1}, {"R2", {}, 0}, {"R1", {}, 1}});
  EXPECT_TRUE(contains_canonical(trees, t2.canonical(q), q));
  EXPECT_EQ(trees.front().height(), 1);
}

TEST(EnumerateTrees, IncludesRunningExampleTree) {
  const Query q = four_hop();
  EXPECT_TRUE(contains_canonical(enumerate_trees(q), four_hop_tree(q).canonical(q), q));
}

TEST(EnumerateTrees, SingleRelationGivesOneNode) {
  const Query q = validate(spec_of({{"R", {"a", "b"}}}, {"a", "b"}));
  const auto trees = enumerate_trees(q);
  ASSERT_EQ(trees.size(), 1u);
  EXPECT_EQ(trees[0].nodes.size(), 1u);
  EXPECT_EQ(choose_plan_tree(q, {{"R", 99}}).canonical(q), trees[0].canonical(q));
}

TEST(EnumerateTrees, OrderedDistinctAndValid) {
  const Query q = four_hop({"x1", "x2", "x3", "x4", "x5"});
  const auto trees = enumerate_trees(q);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    EXPECT_TRUE(verify_tree(trees[i], q).ok);
    EXPECT_TRUE(seen.insert(trees[i].canonical(q)).second);
    if (i > 0) {
      const auto key = [&](const FreeConnexJoinTree& t) {
        return std::make_tuple(t.height(), t.generalized_count(), t.canonical(q));
      };
      EXPECT_LT(key(trees[i - 1]), key(trees[i]));
    }
  }
  EXPECT_EQ(trees.front().height(), 2);
}

TEST(EnumerateTrees, LimitIsRespected) {
  const Query q = four_hop({"x1", "x2", "x3", "x4", "x5"});
  EXPECT_LE(enumerate_trees(q, 3).size(), 3u);
}

TEST(EnumerateTrees, ErrorsForCyclicAndNonFreeConnex) {
  const Query tri = validate(spec_of({{"R", {"a", "b"}}, {"S", {"b", "c"}}, {"T", {"c", "a"}}}, {"a"}));
  EXPECT_THROW(enumerate_trees(tri), Error);
  const Query proj = validate(spec_of({{"R1", {"x1", "x2"}}, {"R2", {"x2", "x3"}}}, {"x1", "x3"}));
  try {
    enumerate_trees(proj);
    FAIL() << "expected NotFreeConnex";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotFreeConnex);
  }
}

TEST(ChoosePlanTree, PrefersHeightOneForTwoRelationQuery) {
  const Query q = two_relation_q1();
  EXPECT_EQ(choose_plan_tree(q).canonical(q), q1_t3(q).canonical(q));
}

TEST(ChoosePlanTree, FrequentlyUpdatedRelationGoesToTheTop) {
  const Query q = four_hop();
  const auto t = choose_plan_tree(q, {{"R1", 1000}, {"R2", 1}, {"R3", 1}, {"R4", 1}});
  const int node = *t.node_of_relation(0);
  EXPECT_EQ(t.input_depth(node), 0);
  for (const auto& other : enumerate_trees(q)) {
    EXPECT_LE(score_tree(t, q, {{"R1", 1000}}), score_tree(other, q, {{"R1", 1000}}));
  }
}

TEST(ChoosePlanTree, MinimizesScoreOverEnumeration) {
  const Query q = four_hop({"x1", "x2", "x3", "x4", "x5"});
  const UpdateCounts counts{{"R1", 3}, {"R2", 10}, {"R3", 1}, {"R4", 5}};
  const auto best = choose_plan_tree(q, counts);
  for (const auto& t : enumerate_trees(q)) EXPECT_LE(score_tree(best, q, counts), score_tree(t, q, counts));
}

TEST(RenderTree, OneLinePerNode) {
  const Query q = four_hop();
  const std::string text = render_tree(four_hop_tree(q), q);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_NE(text.find("generalized attrs={x3}"), std::string::npos);
  EXPECT_NE(text.find("connex"), std::string::npos);
}

TEST(TreeProperties, RandomQueries) {
  std::mt19937_64 rng(7);
  int full_checked = 0, hierarchical_checked = 0;
  for (int i = 0; i < 300; ++i) {
    const Query q = validate(random_query_spec(rng, 5, 6));
    const QueryClass c = classify(q);
    if (!c.free_connex) {
      EXPECT_THROW(enumerate_trees(q), Error);
      continue;
    }
    const auto trees = enumerate_trees(q);
    ASSERT_FALSE(trees.empty());
    for (const auto& t : trees) {
      const auto check = verify_tree(t, q);
      ASSERT_TRUE(check.ok) << check.violation;
    }
    if (c.q_hierarchical) {
      EXPECT_EQ(trees.front().height(), 1);
      ++hierarchical_checked;
    }
    if (q.is_full()) ++full_checked;
    // Full acyclic joins are always free-connex.
    Query full = q;
    full.output.clear();
    full.output_set = 0;
    for (AttrId a : attrs_of(q.all_attrs())) {
      full.output.push_back(a);
      full.output_set |= attr_bit(a);
    }
    EXPECT_FALSE(enumerate_trees(full).empty());
  }
  EXPECT_GT(hierarchical_checked, 10);
  EXPECT_GT(full_checked, 5);
}
