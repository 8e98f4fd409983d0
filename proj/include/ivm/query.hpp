#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ivm/ring.hpp"
#include "ivm/value.hpp"

namespace ivm {

using AttrId = std::uint32_t;
// Attribute sets are bitmasks over AttrId; a query has at most 64 attributes.
using AttrSet = std::uint64_t;
inline constexpr std::size_t kMaxAttributes = 64;

inline AttrSet attr_bit(AttrId a) { return AttrSet{1} << a; }
inline bool subset_of(AttrSet a, AttrSet b) { return (a & ~b) == 0; }
std::vector<AttrId> attrs_of(AttrSet s);

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge, IsNull };

std::string_view compare_op_symbol(CompareOp op);
CompareOp parse_compare_op(std::string_view symbol);

// ---- textual form, as read from a query file ----

struct PredicateSpec {
  std::string attr;
  CompareOp op = CompareOp::Eq;
  Value constant;
  friend bool operator==(const PredicateSpec&, const PredicateSpec&) = default;
};

struct RelationSpec {
  std::string name;
  std::vector<std::string> attrs;
  std::vector<PredicateSpec> filter;
  // Logical relation this schema copies (self-joins); empty means itself.
  std::string source;
  // Column carrying the ring payload in annotated mode.
  std::optional<std::size_t> annotation;
  friend bool operator==(const RelationSpec&, const RelationSpec&) = default;
};

struct AggregateSpec {
  RingKind ring = RingKind::Counting;
  std::vector<std::string> group_by;
  friend bool operator==(const AggregateSpec&, const AggregateSpec&) = default;
};

struct QuerySpec {
  std::vector<RelationSpec> relations;
  std::vector<std::string> output;
  std::optional<AggregateSpec> aggregate;
  friend bool operator==(const QuerySpec&, const QuerySpec&) = default;
};

// ---- validated form ----

struct Selection {
  std::size_t column = 0;
  CompareOp op = CompareOp::Eq;
  Value constant;
  bool matches(const Tuple& t) const;
};

struct Relation {
  std::string name;
  std::vector<AttrId> attrs;
  AttrSet attr_set = 0;
  std::vector<Selection> filter;
  std::string source;
  std::optional<std::size_t> annotation_column;

  bool accepts(const Tuple& t) const;
};

struct Query {
  std::vector<std::string> attr_names;
  std::vector<Relation> relations;
  std::vector<AttrId> output;  // in spec order
  AttrSet output_set = 0;
  std::optional<RingKind> ring;

  AttrSet all_attrs() const;
  bool is_full() const { return output_set == all_attrs(); }
  std::optional<std::size_t> relation_index(std::string_view name) const;
  // Physical relations an update on `name` is applied to: the relation itself,
  // or every copy whose source is `name`.
  std::vector<std::size_t> fan_out(std::string_view name) const;
  std::optional<AttrId> attr(std::string_view name) const;
  std::string describe_attrs(AttrSet s) const;
};

// Interns attributes and rejects duplicate relation names, duplicate attributes
// within a schema, unknown output or filter attributes, more than 64 attributes.
Query validate(const QuerySpec& spec);
QuerySpec to_spec(const Query& q);

struct QueryClass {
  bool acyclic = false;
  bool free_connex = false;
  bool q_hierarchical = false;
  friend bool operator==(const QueryClass&, const QueryClass&) = default;
};

// Decides the flags from the existence of (height-1) free-connex join trees.
QueryClass classify(const Query& q);
// Independent decision by GYO reduction and the pairwise attribute test.
QueryClass classify_by_definition(const Query& q);

bool gyo_acyclic(std::span<const AttrSet> edges);
bool pairwise_q_hierarchical(const Query& q);

struct FreeConnexExtension {
  Query query;                     // output extended to y'
  std::vector<AttrId> added;       // attributes added to y, empty if already free-connex
  std::vector<std::size_t> keep;   // positions of the original output inside query.output
};

// Throws NotAcyclic for cyclic queries.
FreeConnexExtension make_free_connex(const Query& q);

}  // namespace ivm
