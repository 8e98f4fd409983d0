#pragma once

#include <utility>
#include <vector>

#include "ivm/engine.hpp"
#include "ivm/ring.hpp"

namespace ivm {

// Applies an update carrying an explicit annotation. The engine must be
// annotated; deletions retract the stored annotation of the tuple.
PropagationRecord apply_annotated(Engine& engine, UpdateEvent ev, const RingValue& annotation);

// Product over connex nodes of the group annotation of t's projection.
// Throws NotAResult if t is not in the current output.
RingValue result_annotation(const Engine& engine, const Tuple& t);

// Aggregate of a query without output attributes. Throws OutputNotEmpty otherwise.
RingValue aggregate_scalar(const Engine& engine);

// Every output tuple with its annotation, sorted by tuple.
std::vector<std::pair<Tuple, RingValue>> group_annotations(const Engine& engine);

}  // namespace ivm
