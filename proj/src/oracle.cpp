#include "ivm/oracle.hpp"

#include <algorithm>
#include <functional>

#include "ivm/error.hpp"

namespace ivm {

OracleState::OracleState(const Query& q) : q_(&q), rels_(q.relations.size()) {}

bool OracleState::apply(const UpdateEvent& ev) {
  auto idx = q_->relation_index(ev.relation);
  if (!idx) throw Error(ErrorCode::UnknownRelation, ev.relation);
  auto& rel = rels_[*idx];
  if (ev.sign == Sign::Insert) {
    if (!q_->relations[*idx].accepts(ev.tuple)) return false;
    return rel.emplace(ev.tuple, ev.annotation).second;
  }
  return rel.erase(ev.tuple) > 0;
}

std::size_t OracleState::total_tuples() const {
  std::size_t n = 0;
  for (const auto& r : rels_) n += r.size();
  return n;
}

namespace {

// Calls fn(assignment, weights-of-chosen-tuples) for every join result.
void for_each_join(const OracleState& s, const Query& q,
                   const std::function<void(const std::vector<Value>&, const std::vector<const std::pair<const Tuple, std::optional<RingValue>>*>&)>& fn) {
  const std::size_t n = q.relations.size();
  // Join order: each next relation shares attributes with earlier ones when possible.
  std::vector<std::size_t> order;
  std::vector<bool> used(n, false);
  AttrSet bound = 0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!used[i] && (pick == n || ((q.relations[i].attr_set & bound) && !(q.relations[pick].attr_set & bound)))) pick = i;
    }
    used[pick] = true;
    order.push_back(pick);
    bound |= q.relations[pick].attr_set;
  }
  std::vector<Value> value(q.attr_names.size());
  std::vector<int> depth_bound(q.attr_names.size(), -1);
  std::vector<const std::pair<const Tuple, std::optional<RingValue>>*> chosen(n);
  std::function<void(std::size_t)> go = [&](std::size_t d) {
    if (d == n) {
      fn(value, chosen);
      return;
    }
    const Relation& r = q.relations[order[d]];
    for (const auto& entry : s.relation(order[d])) {
      const Tuple& t = entry.first;
      bool ok = true;
      std::size_t k = 0;
      for (; k < r.attrs.size(); ++k) {
        const AttrId a = r.attrs[k];
        if (depth_bound[a] >= 0) {
          if (t[k].is_null() || value[a].is_null() || !(t[k] == value[a])) {
            ok = false;
            break;
          }
        } else {
          value[a] = t[k];
          depth_bound[a] = static_cast<int>(d);
        }
      }
      if (ok) {
        chosen[order[d]] = &entry;
        go(d + 1);
      }
      for (std::size_t j = 0; j < r.attrs.size(); ++j) {
        if (depth_bound[r.attrs[j]] == static_cast<int>(d)) depth_bound[r.attrs[j]] = -1;
      }
    }
  };
  go(0);
}

Tuple output_of(const Query& q, const std::vector<Value>& value) {
  Tuple out;
  for (AttrId a : q.output) out.push_back(value[a]);
  return out;
}

}  // namespace

std::set<Tuple> oracle_query(const OracleState& s, const Query& q) {
  std::set<Tuple> out;
  for_each_join(s, q, [&](const std::vector<Value>& v, const auto&) { out.insert(output_of(q, v)); });
  return out;
}

SignedResults oracle_delta(OracleState& s, const UpdateEvent& ev, const Query& q) {
  SignedResults r;
  r.sign = ev.sign;
  const auto before = oracle_query(s, q);
  if (!s.apply(ev)) return r;
  const auto after = oracle_query(s, q);
  const auto& big = ev.sign == Sign::Insert ? after : before;
  const auto& small = ev.sign == Sign::Insert ? before : after;
  std::set_difference(big.begin(), big.end(), small.begin(), small.end(),
                      std::inserter(r.tuples, r.tuples.end()));
  return r;
}

std::map<Tuple, RingValue> oracle_aggregate(const OracleState& s, const Query& q, const Ring& ring) {
  std::map<Tuple, RingValue> out;
  for_each_join(s, q, [&](const std::vector<Value>& v, const auto& chosen) {
    RingValue w = ring.one();
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const auto& [t, ann] = *chosen[i];
      const auto& rel = q.relations[i];
      RingValue tw = ann ? *ann : (rel.annotation_column ? ring.lift(t[*rel.annotation_column]) : ring.one());
      w = ring.mul(w, tw);
    }
    auto key = output_of(q, v);
    auto it = out.find(key);
    if (it == out.end()) {
      out.emplace(std::move(key), w);
    } else {
      it->second = ring.add(it->second, w);
    }
  });
  return out;
}

}  // namespace ivm
