#include "ivm/aggregation.hpp"

#include <algorithm>

#include "engine_access.hpp"
#include "ivm/enumeration.hpp"
#include "ivm/error.hpp"

namespace ivm {

using detail::EngineAccess;

namespace {

void require_ring(const Engine& engine) {
  if (!engine.annotated()) throw Error(ErrorCode::RingMismatch, "engine was built without a ring");
}

}  // namespace

PropagationRecord apply_annotated(Engine& engine, UpdateEvent ev, const RingValue& annotation) {
  require_ring(engine);
  ev.annotation = annotation;
  return engine.apply(ev);
}

RingValue result_annotation(const Engine& engine, const Tuple& t) {
  require_ring(engine);
  const Query& q = engine.query();
  if (t.size() != q.output.size()) throw Error(ErrorCode::NotAResult, "arity mismatch");
  const auto& nodes = EngineAccess::nodes(engine);
  const Ring& ring = engine.ring();
  RingValue w = ring.one();
  for (const auto& tn : engine.tree().nodes) {
    if (!tn.in_connex) continue;
    const auto& n = nodes[static_cast<std::size_t>(tn.id)];
    Tuple y;
    for (AttrId a : attrs_of(tn.attrs & q.output_set)) {
      const auto pos = std::find(q.output.begin(), q.output.end(), a) - q.output.begin();
      y.push_back(t[static_cast<std::size_t>(pos)]);
    }
    auto it = n.yentry_of.find(y);
    if (it == n.yentry_of.end() || n.yentries[it->second].count == 0) {
      throw Error(ErrorCode::NotAResult, to_string(t));
    }
    w = ring.mul(w, n.yentries[it->second].weight);
  }
  return w;
}

RingValue aggregate_scalar(const Engine& engine) {
  require_ring(engine);
  if (!engine.query().output.empty()) throw Error(ErrorCode::OutputNotEmpty, "query has output attributes");
  const auto& root = EngineAccess::nodes(engine)[static_cast<std::size_t>(engine.tree().root)];
  auto it = root.yentry_of.find(Tuple{});
  if (it == root.yentry_of.end() || root.yentries[it->second].count == 0) return engine.ring().zero();
  return root.yentries[it->second].weight;
}

std::vector<std::pair<Tuple, RingValue>> group_annotations(const Engine& engine) {
  std::vector<std::pair<Tuple, RingValue>> out;
  auto cursor = full_enum(engine);
  Tuple t;
  while (cursor.next(t)) out.emplace_back(t, result_annotation(engine, t));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace ivm
