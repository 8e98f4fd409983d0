#include "ivm/query.hpp"

#include <algorithm>
#include <bit>
#include <unordered_map>
#include <unordered_set>

#include "ivm/error.hpp"

namespace ivm {

std::vector<AttrId> attrs_of(AttrSet s) {
  std::vector<AttrId> out;
  while (s) {
    out.push_back(static_cast<AttrId>(std::countr_zero(s)));
    s &= s - 1;
  }
  return out;
}

std::string_view compare_op_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
    case CompareOp::IsNull: return "is_null";
  }
  return "=";
}

CompareOp parse_compare_op(std::string_view s) {
  if (s == "=" || s == "==") return CompareOp::Eq;
  if (s == "!=" || s == "<>") return CompareOp::Ne;
  if (s == "<") return CompareOp::Lt;
  if (s == "<=") return CompareOp::Le;
  if (s == ">") return CompareOp::Gt;
  if (s == ">=") return CompareOp::Ge;
  if (s == "is_null") return CompareOp::IsNull;
  throw Error(ErrorCode::MalformedQuery, "unknown comparator '" + std::string(s) + "'");
}

bool Selection::matches(const Tuple& t) const {
  const Value& v = t[column];
  if (op == CompareOp::IsNull) return v.is_null();
  if (v.is_null()) return false;
  const int c = compare_values(v, constant);
  switch (op) {
    case CompareOp::Eq: return c == 0;
    case CompareOp::Ne: return c != 0;
    case CompareOp::Lt: return c < 0;
    case CompareOp::Le: return c <= 0;
    case CompareOp::Gt: return c > 0;
    case CompareOp::Ge: return c >= 0;
    case CompareOp::IsNull: break;
  }
  return false;
}

bool Relation::accepts(const Tuple& t) const {
  return std::all_of(filter.begin(), filter.end(), [&](const Selection& s) { return s.matches(t); });
}

AttrSet Query::all_attrs() const {
  AttrSet s = 0;
  for (const auto& r : relations) s |= r.attr_set;
  return s;
}

std::optional<std::size_t> Query::relation_index(std::string_view name) const {
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (relations[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Query::fan_out(std::string_view name) const {
  if (auto i = relation_index(name)) return {*i};
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (relations[i].source == name) out.push_back(i);
  }
  return out;
}

std::optional<AttrId> Query::attr(std::string_view name) const {
  for (std::size_t i = 0; i < attr_names.size(); ++i) {
    if (attr_names[i] == name) return static_cast<AttrId>(i);
  }
  return std::nullopt;
}

std::string Query::describe_attrs(AttrSet s) const {
  std::string out = "{";
  bool first = true;
  for (AttrId a : attrs_of(s)) {
    if (!first) out += ",";
    out += attr_names[a];
    first = false;
  }
  return out + "}";
}

Query validate(const QuerySpec& spec) {
  Query q;
  if (spec.relations.empty()) throw Error(ErrorCode::MalformedQuery, "query has no relations");
  std::unordered_map<std::string, AttrId> ids;
  std::unordered_set<std::string> names;
  for (const auto& rs : spec.relations) {
    if (rs.name.empty()) throw Error(ErrorCode::MalformedQuery, "relation without a name");
    if (!names.insert(rs.name).second) {
      throw Error(ErrorCode::MalformedQuery, "duplicate relation name '" + rs.name + "'");
    }
    Relation r;
    r.name = rs.name;
    r.source = rs.source;
    for (const auto& a : rs.attrs) {
      auto [it, fresh] = ids.emplace(a, static_cast<AttrId>(q.attr_names.size()));
      if (fresh) {
        if (q.attr_names.size() == kMaxAttributes) {
          throw Error(ErrorCode::MalformedQuery, "more than 64 attributes");
        }
        q.attr_names.push_back(a);
      }
      if (r.attr_set & attr_bit(it->second)) {
        throw Error(ErrorCode::MalformedQuery,
                    "attribute '" + a + "' repeated in relation '" + rs.name + "'");
      }
      r.attrs.push_back(it->second);
      r.attr_set |= attr_bit(it->second);
    }
    for (const auto& p : rs.filter) {
      auto pos = std::find(rs.attrs.begin(), rs.attrs.end(), p.attr);
      if (pos == rs.attrs.end()) {
        throw Error(ErrorCode::MalformedQuery,
                    "filter attribute '" + p.attr + "' not in relation '" + rs.name + "'");
      }
      r.filter.push_back({static_cast<std::size_t>(pos - rs.attrs.begin()), p.op, p.constant});
    }
    if (rs.annotation) {
      if (*rs.annotation >= rs.attrs.size()) {
        throw Error(ErrorCode::MalformedQuery, "annotation column out of range in '" + rs.name + "'");
      }
      r.annotation_column = rs.annotation;
    }
    q.relations.push_back(std::move(r));
  }

  std::vector<std::string> output = spec.output;
  if (spec.aggregate) {
    q.ring = spec.aggregate->ring;
    if (output.empty()) {
      output = spec.aggregate->group_by;
    } else if (output != spec.aggregate->group_by) {
      throw Error(ErrorCode::MalformedQuery, "group_by must equal the output attributes");
    }
  }
  for (const auto& a : output) {
    auto it = ids.find(a);
    if (it == ids.end()) throw Error(ErrorCode::MalformedQuery, "unknown output attribute '" + a + "'");
    if (q.output_set & attr_bit(it->second)) {
      throw Error(ErrorCode::MalformedQuery, "output attribute '" + a + "' repeated");
    }
    q.output.push_back(it->second);
    q.output_set |= attr_bit(it->second);
  }
  return q;
}

QuerySpec to_spec(const Query& q) {
  QuerySpec spec;
  for (const auto& r : q.relations) {
    RelationSpec rs;
    rs.name = r.name;
    rs.source = r.source;
    rs.annotation = r.annotation_column;
    for (AttrId a : r.attrs) rs.attrs.push_back(q.attr_names[a]);
    for (const auto& s : r.filter) {
      rs.filter.push_back({rs.attrs[s.column], s.op, s.constant});
    }
    spec.relations.push_back(std::move(rs));
  }
  for (AttrId a : q.output) spec.output.push_back(q.attr_names[a]);
  if (q.ring) {
    spec.aggregate = AggregateSpec{*q.ring, spec.output};
  }
  return spec;
}

bool gyo_acyclic(std::span<const AttrSet> input) {
  std::vector<AttrSet> edges(input.begin(), input.end());
  std::vector<bool> alive(edges.size(), true);
  bool changed = true;
  while (changed) {
    changed = false;
    AttrSet seen = 0, shared = 0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!alive[i]) continue;
      shared |= seen & edges[i];
      seen |= edges[i];
    }
    // Drop attributes that occur in a single edge.
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (alive[i] && (edges[i] & ~shared)) {
        edges[i] &= shared;
        changed = true;
      }
    }
    // Drop edges contained in another live edge.
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = 0; j < edges.size(); ++j) {
        if (i != j && alive[j] && subset_of(edges[i], edges[j])) {
          alive[i] = false;
          changed = true;
          break;
        }
      }
    }
  }
  return std::count(alive.begin(), alive.end(), true) <= 1;
}

bool pairwise_q_hierarchical(const Query& q) {
  const auto attrs = attrs_of(q.all_attrs());
  auto occurrences = [&](AttrId a) {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < q.relations.size(); ++i) {
      if (q.relations[i].attr_set & attr_bit(a)) m |= std::uint64_t{1} << i;
    }
    return m;
  };
  for (AttrId a : attrs) {
    for (AttrId b : attrs) {
      if (a == b) continue;
      const auto ea = occurrences(a), eb = occurrences(b);
      const bool sub = (ea & ~eb) == 0, sup = (eb & ~ea) == 0, disjoint = (ea & eb) == 0;
      if (!sub && !sup && !disjoint) return false;
      const bool strict_sub = sub && ea != eb;
      if ((q.output_set & attr_bit(a)) && strict_sub && !(q.output_set & attr_bit(b))) return false;
    }
  }
  return true;
}

QueryClass classify_by_definition(const Query& q) {
  QueryClass c;
  std::vector<AttrSet> edges;
  for (const auto& r : q.relations) edges.push_back(r.attr_set);
  c.acyclic = gyo_acyclic(edges);
  edges.push_back(q.output_set);
  c.free_connex = c.acyclic && gyo_acyclic(edges);
  c.q_hierarchical = c.free_connex && pairwise_q_hierarchical(q);
  return c;
}

FreeConnexExtension make_free_connex(const Query& q) {
  FreeConnexExtension ext{q, {}, {}};
  for (std::size_t i = 0; i < q.output.size(); ++i) ext.keep.push_back(i);
  const QueryClass c = classify(q);
  if (!c.acyclic) throw Error(ErrorCode::NotAcyclic, "query has no generalized join tree");
  if (c.free_connex) return ext;

  auto with_output = [&](AttrSet extra) {
    Query e = q;
    for (AttrId a : attrs_of(extra)) {
      e.output.push_back(a);
      e.output_set |= attr_bit(a);
    }
    return e;
  };
  auto free_connex = [&](AttrSet extra) { return classify(with_output(extra)).free_connex; };

  // Existential attributes in order of first appearance.
  std::vector<AttrId> candidates;
  for (const auto& r : q.relations) {
    for (AttrId a : r.attrs) {
      if (!(q.output_set & attr_bit(a)) &&
          std::find(candidates.begin(), candidates.end(), a) == candidates.end()) {
        candidates.push_back(a);
      }
    }
  }
  AttrSet extra = 0;
  while (!free_connex(extra)) {
    std::optional<AttrId> pick;
    for (AttrId a : candidates) {
      if (!(extra & attr_bit(a)) && free_connex(extra | attr_bit(a))) {
        pick = a;
        break;
      }
    }
    if (!pick) {
      for (AttrId a : candidates) {
        if (!(extra & attr_bit(a))) {
          pick = a;
          break;
        }
      }
    }
    extra |= attr_bit(*pick);
  }
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    const AttrSet without = extra & ~attr_bit(*it);
    if ((extra & attr_bit(*it)) && free_connex(without)) extra = without;
  }
  ext.query = with_output(extra);
  ext.added = attrs_of(extra);
  return ext;
}

}  // namespace ivm
