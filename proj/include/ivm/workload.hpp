#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ivm/engine.hpp"
#include "ivm/query.hpp"

namespace ivm {

enum class GraphQueryKind { ThreeHop, FourHop, FourHopProjected, Star, Chain };

struct GraphQueryShape {
  GraphQueryKind kind = GraphQueryKind::ThreeHop;
  int hops = 3;  // path length for Chain
};

// "3hop", "4hop", "4hop-projected", "star", "chain-<k>".
GraphQueryShape parse_graph_query_kind(const std::string& name);

using Edge = std::pair<std::int64_t, std::int64_t>;

// `src dst` per line; '#' and '%' lines are comments. Throws BadGraphFile.
std::vector<Edge> parse_edge_list(const std::string& text);
std::vector<Edge> read_edge_list(const std::string& path);
// Distinct directed edges over vertices [0, vertices), in random order.
std::vector<Edge> synthetic_graph(std::size_t edges, std::size_t vertices, std::uint64_t seed);

// Self-join copies G1, G2, ... of the logical edge relation "G". The filter,
// if given, keeps endpoints below `filter_below` on the designated column.
QuerySpec graph_query(GraphQueryShape shape, std::optional<std::int64_t> filter_below = std::nullopt);

// Count-based sliding window: edge i is inserted at time i and deleted at time
// i + window. No window gives an insertion-only stream.
std::vector<UpdateEvent> window_stream(const std::vector<Edge>& edges, std::optional<std::size_t> window,
                                       const std::string& relation = "G");

struct Workload {
  QuerySpec spec;
  Query query;
  std::vector<UpdateEvent> trace;
};

// Selectivity is the fraction of distinct vertices the endpoint filter keeps.
Workload generate_workload(GraphQueryShape shape, const std::vector<Edge>& edges,
                           std::optional<std::size_t> window, double selectivity = 1.0);

// Events against the physical relations an update is applied to, dropping
// copies whose filter rejects the tuple.
std::vector<UpdateEvent> expand_events(const Query& q, const std::vector<UpdateEvent>& events);

// Logical relation names of a query: sources of copies, and plain relations.
std::vector<std::string> logical_relations(const Query& q);

struct RandomTraceOptions {
  std::size_t events = 200;
  std::int64_t domain = 3;
  double delete_fraction = 0.35;
  double noise_fraction = 0.05;  // duplicate inserts and deletes of absent tuples
};

std::vector<UpdateEvent> random_trace(const Query& q, const RandomTraceOptions& opt, std::mt19937_64& rng);
// Distinct inserts only.
std::vector<UpdateEvent> random_insertion_trace(const Query& q, std::size_t events, std::int64_t domain,
                                                std::mt19937_64& rng);
// Tuples are deleted in insertion order once more than `window` are present.
std::vector<UpdateEvent> random_fifo_trace(const Query& q, std::size_t events, std::size_t window,
                                           std::int64_t domain, std::mt19937_64& rng);

// R1(x1,x2) ⋈ R2(x2,x3) ⋈ R3(x3,x4) ⋈ R4(x4,x5) with output x1..x4.
QuerySpec four_hop_spec();
// R1(x1,x2) ⋈ R2(x2,x3) with the given output.
QuerySpec two_path_spec(std::vector<std::string> output);

// Insert [n]x[n] into R2, R3, R4, then into R1.
std::vector<UpdateEvent> layered_insertion_trace(std::size_t n);
// 4n long tuples in each of R1 and R2 whose lifespans enclose 8n pairwise
// disjoint short tuples alternating between R1 and R2.
std::vector<UpdateEvent> nested_lifespan_trace(std::size_t n);

}  // namespace ivm
