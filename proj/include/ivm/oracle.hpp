#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ivm/engine.hpp"
#include "ivm/query.hpp"
#include "ivm/ring.hpp"

namespace ivm {

// Plain tuple sets mirroring an update stream under set semantics.
class OracleState {
 public:
  explicit OracleState(const Query& q);

  // Update on a physical relation; false if non-effective or filtered out.
  bool apply(const UpdateEvent& ev);
  const std::map<Tuple, std::optional<RingValue>>& relation(std::size_t i) const { return rels_[i]; }
  std::size_t total_tuples() const;

 private:
  const Query* q_;
  std::vector<std::map<Tuple, std::optional<RingValue>>> rels_;
};

// Nested-loop join projected to the output attributes.
std::set<Tuple> oracle_query(const OracleState& s, const Query& q);

struct SignedResults {
  Sign sign = Sign::Insert;
  std::set<Tuple> tuples;
};

// Applies the event to `s` and returns the change of the output.
SignedResults oracle_delta(OracleState& s, const UpdateEvent& ev, const Query& q);

// GROUP BY the output attributes, summing products of tuple annotations.
std::map<Tuple, RingValue> oracle_aggregate(const OracleState& s, const Query& q, const Ring& ring);

}  // namespace ivm
