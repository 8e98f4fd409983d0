#pragma once

#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include "ivm/engine.hpp"
#include "ivm/enumeration.hpp"
#include "ivm/join_tree.hpp"
#include "ivm/query.hpp"

namespace ivm::testing {

inline Tuple T(std::initializer_list<std::int64_t> vs) {
  Tuple t;
  for (auto v : vs) t.push_back(Value::integer(v));
  return t;
}

inline UpdateEvent ins(const std::string& rel, Tuple t) { return {rel, std::move(t), Sign::Insert}; }
inline UpdateEvent del(const std::string& rel, Tuple t) { return {rel, std::move(t), Sign::Delete}; }

inline QuerySpec spec_of(std::vector<std::pair<std::string, std::vector<std::string>>> rels,
                         std::vector<std::string> output) {
  QuerySpec s;
  for (auto& [name, attrs] : rels) s.relations.push_back({name, attrs, {}, {}, {}});
  s.output = std::move(output);
  return s;
}

// R1(x1,x2) ⋈ R2(x2,x3) ⋈ R3(x3,x4) ⋈ R4(x4,x5)
inline Query four_hop(std::vector<std::string> output = {"x1", "x2", "x3", "x4"}) {
  return validate(spec_of({{"R1", {"x1", "x2"}}, {"R2", {"x2", "x3"}}, {"R3", {"x3", "x4"}}, {"R4", {"x4", "x5"}}},
                          std::move(output)));
}

// Generalized root [x3] over R2 and R3, with R1 below R2 and R4 below R3.
inline FreeConnexJoinTree four_hop_tree(const Query& q) {
  return build_tree(q, {{"", {"x3"}, -1}, {"R2", {}, 0}, {"R3", {}, 0}, {"R1", {}, 1}, {"R4", {}, 2}});
}

inline std::vector<UpdateEvent> running_example_contents() {
  std::vector<UpdateEvent> evs;
  for (auto t : {T({1, 2}), T({2, 2}), T({3, 3})}) evs.push_back(ins("R1", t));
  for (auto t : {T({1, 2}), T({2, 2}), T({4, 3}), T({1, 1}), T({2, 4}), T({1, 4})}) evs.push_back(ins("R2", t));
  for (auto t : {T({1, 1}), T({2, 5}), T({3, 3}), T({1, 2}), T({4, 4})}) evs.push_back(ins("R3", t));
  for (auto t : {T({1, 1}), T({2, 2}), T({3, 3}), T({4, 4})}) evs.push_back(ins("R4", t));
  return evs;
}

// Q1 = R1(x1,x2) ⋈ R2(x2,x3) with output x2.
inline Query two_relation_q1() { return validate(spec_of({{"R1", {"x1", "x2"}}, {"R2", {"x2", "x3"}}}, {"x2"})); }

inline std::set<Tuple> drain(DeltaBatch& b) {
  std::set<Tuple> out;
  Tuple t;
  while (b.next(t)) out.insert(t);
  return out;
}

inline std::set<Tuple> all_results(const Engine& e) {
  std::set<Tuple> out;
  auto c = full_enum(e);
  Tuple t;
  while (c.next(t)) out.insert(t);
  return out;
}

// Runs the full update protocol and returns the delta as a set (asserting no
// duplicates is left to callers that need it).
inline std::vector<Tuple> run_update(Engine& e, const UpdateEvent& ev, PropagationRecord* rec_out = nullptr) {
  std::vector<Tuple> out;
  auto rec = process_update(e, ev, [&](Sign, const Tuple& t) { out.push_back(t); });
  if (rec_out) *rec_out = std::move(rec);
  return out;
}

}  // namespace ivm::testing
