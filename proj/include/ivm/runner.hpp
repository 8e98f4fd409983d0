#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ivm/engine.hpp"
#include "ivm/query.hpp"

namespace ivm {

enum class RunMode { Delta, Full, Aggregate };

struct RunOptions {
  RunMode mode = RunMode::Delta;
  std::size_t full_every = 0;  // events between full enumerations; 0 means a tenth of the trace
  bool verify = false;
  std::size_t verify_limit = 1000;  // verification stops above this many base tuples
  std::optional<std::size_t> tree_index;  // into enumerate_trees; otherwise the cheapest tree
  std::size_t prefix = 1000;  // events counted per relation to score trees
  bool check_space = false;
  std::ostream* out = nullptr;  // delta, full-result or aggregate stream
};

struct RunReport {
  std::size_t events = 0;
  std::size_t physical_updates = 0;
  std::size_t ignored = 0;
  std::uint64_t delta_tuples = 0;
  std::uint64_t full_enumerations = 0;
  std::uint64_t last_full_size = 0;
  std::uint64_t counter_changes = 0;
  std::size_t peak_view_tuples = 0;
  std::size_t peak_base_tuples = 0;
  std::uint64_t max_delta_delay_ops = 0;
  std::uint64_t max_full_delay_ops = 0;
  std::uint64_t space_violations = 0;  // events with views above 3x the node relations
  double peak_view_to_input_ratio = 0;  // views over input tuples alone
  bool verified = false;
  bool verify_disabled = false;
  std::uint64_t checks = 0;
  std::uint64_t mismatches = 0;
  std::string first_mismatch;
  double seconds = 0;
  double latency_p50_us = 0;
  double latency_p99_us = 0;
  double latency_max_us = 0;
  std::string added_output;  // attributes added to reach a free-connex output
  std::string tree;
};

RunReport run(const Query& q, const std::vector<UpdateEvent>& trace, const RunOptions& opt);

// One `key=value` line per metric.
void write_metrics(std::ostream& os, const RunReport& r);

}  // namespace ivm
