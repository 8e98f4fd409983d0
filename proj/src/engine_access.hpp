#pragma once

#include "ivm/engine.hpp"

namespace ivm::detail {

// Internal access to engine state for the enumeration and aggregation modules.
struct EngineAccess {
  static const std::vector<NodeState>& nodes(const Engine& e) { return e.nodes_; }
  static std::vector<NodeState>& nodes(Engine& e) { return e.nodes_; }
  static const std::vector<std::pair<int, int>>& out_src(const Engine& e) { return e.out_src_; }
  static std::vector<std::pair<int, std::uint32_t>>& pending_live(Engine& e) { return e.pending_live_; }
  // Completes an in-flight update: live views, deferred deletions, epoch.
  static void finish(Engine& e);
};

}  // namespace ivm::detail
