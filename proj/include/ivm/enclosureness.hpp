#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ivm/engine.hpp"
#include "ivm/join_tree.hpp"
#include "ivm/query.hpp"

namespace ivm {

inline constexpr std::int64_t kMinusInfinity = std::numeric_limits<std::int64_t>::min();
inline constexpr std::int64_t kPlusInfinity = std::numeric_limits<std::int64_t>::max();

struct Interval {
  std::int64_t start = 0;
  std::int64_t end = 0;
  bool contains(const Interval& o) const { return start <= o.start && o.end <= end; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct Lifespan {
  Interval span;
  std::string relation;
  Tuple tuple;
};

// Forward: end moved to the first deletion below the tuple's node after its start.
// Backward: start moved to the last insertion below it before its end.
struct EffectiveLifespan {
  Interval forward;
  Interval backward;
};

struct SequenceClass {
  bool fifo = false;
  bool insertion_only = false;
  bool deletion_only = false;
};

enum class Exec { Serial, Parallel };

struct LambdaReport {
  std::vector<std::uint64_t> per_tuple;
  std::uint64_t total = 0;
  std::map<std::string, double> per_relation;  // mean per relation, unclamped
  // Per-tuple values may be lower bounds when the owner search gives up.
  bool exact = true;
  std::uint64_t upper_total = 0;
  std::size_t inexact_tuples = 0;

  std::size_t tuples() const { return per_tuple.size(); }
  // max(mean, 1)
  double value() const;
};

// Stable sort by timestamp; at equal timestamps deletions come first unless
// `deletes_first` is false.
std::vector<UpdateEvent> order_events(std::span<const UpdateEvent> events, bool deletes_first = true);

// Pairs each insertion with the next deletion of the same tuple. A deletion of a
// never-seen tuple opens at -inf; tuples still present end at +inf.
std::vector<Lifespan> lifespans(std::span<const UpdateEvent> events);

SequenceClass classify_sequence(const std::vector<Lifespan>& spans);

// Per tuple: most pairwise-disjoint lifespans strictly inside its own.
LambdaReport classic_lambda(const std::vector<Lifespan>& spans, Exec exec = Exec::Parallel);

std::vector<EffectiveLifespan> effective_lifespans(const std::vector<Lifespan>& spans,
                                                   const FreeConnexJoinTree& tree, const Query& q);

// Per tuple at node e: most tuples from strict descendants of e whose forward or
// backward effective lifespan lies inside the tuple's lifespan, pairwise disjoint.
// Throws UnmappedRelation for relations absent from the tree.
LambdaReport tree_lambda(const std::vector<Lifespan>& spans, const FreeConnexJoinTree& tree,
                         const Query& q, Exec exec = Exec::Parallel);

// Interval scheduling by earliest end.
std::uint64_t max_disjoint(std::vector<Interval> intervals);

struct OwnerSchedule {
  std::uint64_t value = 0;  // best solution found
  std::uint64_t upper = 0;  // equals value when exact
  bool exact = true;
};

// Each owner contributes at most one of its intervals; intervals taken must be
// pairwise disjoint. Greedy and Lagrangian bounds first, then branch and bound
// limited to `budget` nodes.
OwnerSchedule max_disjoint_one_per_owner(std::vector<std::pair<Interval, std::uint32_t>> candidates,
                                         std::uint64_t budget = 20000);

}  // namespace ivm
