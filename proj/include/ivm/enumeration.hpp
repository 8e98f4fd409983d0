#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ivm/engine.hpp"

namespace ivm {

enum class WitnessKind { Root, Midway };

struct WitnessTuple {
  Tuple tuple;  // over y ∩ e
  int node = 0;
  WitnessKind kind = WitnessKind::Root;
  std::uint32_t entry = 0;
};

// Primitive operations (bucket probes and iterator steps) between yields.
struct DelayStats {
  std::uint64_t max_ops = 0;
  std::uint64_t yields = 0;
  std::uint64_t ops = 0;  // since the last yield
};

namespace detail {

// Nested iteration over hash buckets. Every level's bucket is keyed by values
// chosen at an earlier level, and no bucket is ever empty, so each step costs a
// number of operations bounded by the number of levels.
class Odometer {
 public:
  enum class Source : std::uint8_t { Fixed, Enum, Live };

  struct Level {
    int node = 0;
    Source src = Source::Enum;
    int dep = -1;
    int slot = -1;
    const std::vector<int>* keypos = nullptr;
    std::uint32_t fixed = 0;
    const IdBucket* bucket = nullptr;
    std::size_t idx = 0;
    std::uint32_t cur = 0;
  };

  Odometer() = default;
  explicit Odometer(const std::vector<NodeState>* nodes) : nodes_(nodes) {}

  void add_fixed(int node, std::uint32_t entry);
  void add_live(int node, int slot, int dep, const std::vector<int>* keypos);
  void add_enum(int node, int dep, const std::vector<int>* keypos);
  // Appends Enum levels for the connex subtrees below `node`, skipping `exclude`.
  void add_subtrees(int node, int exclude);

  bool next(std::uint64_t& ops);
  const std::vector<Level>& levels() const { return levels_; }
  std::uint32_t entry_at(int node) const { return levels_[static_cast<std::size_t>(level_of_[static_cast<std::size_t>(node)])].cur; }

 private:
  bool init(std::size_t i, std::uint64_t& ops);
  void push(Level l);

  const std::vector<NodeState>* nodes_ = nullptr;
  std::vector<Level> levels_;
  std::vector<int> level_of_;
  bool started_ = false;
  bool done_ = false;
};

}  // namespace detail

class ResultCursor {
 public:
  bool next(Tuple& out);
  std::optional<Tuple> next();
  const DelayStats& stats() const { return stats_; }

 private:
  friend ResultCursor full_enum(const Engine& engine);

  const Engine* engine_ = nullptr;
  std::uint64_t epoch_ = 0;
  detail::Odometer odo_;
  DelayStats stats_;
};

// Results of one update: the delta of the query output.
class DeltaBatch {
 public:
  Sign sign() const { return sign_; }
  bool next(Tuple& out);
  std::optional<Tuple> next();
  bool exhausted() const { return done_; }
  const DelayStats& stats() const { return stats_; }
  std::size_t witness_count() const { return witnesses_.size(); }

 private:
  friend DeltaBatch delta_enum(Engine& engine, const PropagationRecord& rec,
                               std::vector<WitnessTuple> witnesses);
  void start_witness();

  Engine* engine_ = nullptr;
  std::uint64_t epoch_ = 0;
  Sign sign_ = Sign::Insert;
  std::vector<WitnessTuple> witnesses_;
  std::size_t wi_ = 0;
  bool active_ = false;
  bool done_ = true;
  detail::Odometer odo_;
  DelayStats stats_;
};

// Full result set Q(D). Throws UpdateInFlight while an update is unfinished.
ResultCursor full_enum(const Engine& engine);

// Witnesses of an applied update. Must run before update_live_views.
std::vector<WitnessTuple> find_witnesses(const Engine& engine, const PropagationRecord& rec);

// Throws std::logic_error on an engine built without live views.
DeltaBatch delta_enum(Engine& engine, const PropagationRecord& rec, std::vector<WitnessTuple> witnesses);

// Drains the batch, brings live views to the post-update state and completes
// the deferred deletions.
void update_live_views(Engine& engine, DeltaBatch& batch);

// Completes an update on an engine built without live views.
void complete_update(Engine& engine);

// apply + find_witnesses + delta_enum + update_live_views, passing each delta
// tuple to `sink`. Returns the propagation record.
template <class Sink>
PropagationRecord process_update(Engine& engine, const UpdateEvent& ev, Sink&& sink) {
  PropagationRecord rec = engine.apply(ev);
  DeltaBatch batch = delta_enum(engine, rec, find_witnesses(engine, rec));
  Tuple t;
  while (batch.next(t)) sink(rec.sign, t);
  update_live_views(engine, batch);
  return rec;
}

}  // namespace ivm
