#pragma once

#include <functional>
#include <map>
#include <set>

#include "ivm/join_tree.hpp"
#include "ivm/oracle.hpp"

namespace ivm::testing {

// π_e of the join of the input relations in the subtree of `node`, laid out in
// the engine's order for that node.
inline std::set<Tuple> subtree_join(const OracleState& s, const Query& q, const FreeConnexJoinTree& tree, int node) {
  std::vector<std::size_t> rels;
  std::function<void(int)> collect = [&](int id) {
    const auto& n = tree.nodes[static_cast<std::size_t>(id)];
    if (n.kind == NodeKind::Input) rels.push_back(n.relation);
    for (int c : n.children) collect(c);
  };
  collect(node);
  const auto& target = tree.nodes[static_cast<std::size_t>(node)];
  const std::vector<AttrId> layout =
      target.kind == NodeKind::Input ? q.relations[target.relation].attrs : attrs_of(target.attrs);
  std::set<Tuple> out;
  std::map<AttrId, Value> bound;
  std::function<void(std::size_t)> go = [&](std::size_t i) {
    if (i == rels.size()) {
      Tuple t;
      for (AttrId a : layout) t.push_back(bound.at(a));
      out.insert(std::move(t));
      return;
    }
    const auto& r = q.relations[rels[i]];
    for (const auto& [tuple, ann] : s.relation(rels[i])) {
      std::vector<AttrId> fresh;
      bool ok = true;
      for (std::size_t k = 0; k < r.attrs.size() && ok; ++k) {
        auto it = bound.find(r.attrs[k]);
        if (it == bound.end()) {
          bound.emplace(r.attrs[k], tuple[k]);
          fresh.push_back(r.attrs[k]);
        } else {
          ok = it->second == tuple[k];
        }
      }
      if (ok) go(i + 1);
      for (AttrId a : fresh) bound.erase(a);
    }
  };
  go(0);
  return out;
}

}  // namespace ivm::testing
