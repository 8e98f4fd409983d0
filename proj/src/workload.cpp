#include "ivm/workload.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "ivm/error.hpp"
#include "ivm/io.hpp"

namespace ivm {

GraphQueryShape parse_graph_query_kind(const std::string& name) {
  if (name == "3hop") return {GraphQueryKind::ThreeHop, 3};
  if (name == "4hop") return {GraphQueryKind::FourHop, 4};
  if (name == "4hop-projected") return {GraphQueryKind::FourHopProjected, 4};
  if (name == "star") return {GraphQueryKind::Star, 4};
  if (name.rfind("chain-", 0) == 0) {
    int k = 0;
    const char* b = name.data() + 6;
    const char* e = name.data() + name.size();
    auto [p, ec] = std::from_chars(b, e, k);
    if (ec == std::errc() && p == e && k >= 1 && k <= 60) return {GraphQueryKind::Chain, k};
  }
  throw Error(ErrorCode::MalformedQuery, "unknown workload kind '" + name + "'");
}

std::vector<Edge> parse_edge_list(const std::string& text) {
  std::vector<Edge> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == '%') continue;
    std::istringstream ls(line);
    std::int64_t s = 0, d = 0;
    std::string rest;
    if (!(ls >> s >> d) || (ls >> rest)) {
      throw Error(ErrorCode::BadGraphFile, "line " + std::to_string(lineno) + ": expected two integers");
    }
    out.emplace_back(s, d);
  }
  return out;
}

std::vector<Edge> read_edge_list(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw Error(ErrorCode::BadGraphFile, e.what());
  }
  return parse_edge_list(text);
}

std::vector<Edge> synthetic_graph(std::size_t edges, std::size_t vertices, std::uint64_t seed) {
  if (vertices == 0 || edges > vertices * vertices) {
    throw Error(ErrorCode::BadGraphFile, "cannot place " + std::to_string(edges) + " distinct edges");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> pick(0, static_cast<std::int64_t>(vertices) - 1);
  std::set<Edge> seen;
  std::vector<Edge> out;
  while (out.size() < edges) {
    Edge e{pick(rng), pick(rng)};
    if (seen.insert(e).second) out.push_back(e);
  }
  return out;
}

QuerySpec graph_query(GraphQueryShape shape, std::optional<std::int64_t> filter_below) {
  QuerySpec q;
  auto add = [&](const std::string& a, const std::string& b) {
    RelationSpec r;
    r.name = "G" + std::to_string(q.relations.size() + 1);
    r.attrs = {a, b};
    r.source = "G";
    q.relations.push_back(std::move(r));
  };
  auto filter_last = [&](const std::string& attr) {
    if (filter_below) q.relations.back().filter.push_back({attr, CompareOp::Lt, Value::integer(*filter_below)});
  };
  const std::string names = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  auto var = [&](int i) { return i < 26 ? std::string(1, names[static_cast<std::size_t>(i)]) : "V" + std::to_string(i); };
  switch (shape.kind) {
    case GraphQueryKind::ThreeHop:
    case GraphQueryKind::FourHop:
    case GraphQueryKind::Chain: {
      const int k = shape.kind == GraphQueryKind::ThreeHop ? 3 : shape.kind == GraphQueryKind::FourHop ? 4 : shape.hops;
      for (int i = 0; i < k; ++i) add(var(i), var(i + 1));
      filter_last(var(k));
      for (int i = 0; i <= k; ++i) q.output.push_back(var(i));
      break;
    }
    case GraphQueryKind::FourHopProjected:
      for (int i = 0; i < 4; ++i) add(var(i), var(i + 1));
      filter_last(var(4));
      q.output = {"B", "C", "D"};
      break;
    case GraphQueryKind::Star:
      for (int i = 1; i <= 4; ++i) add("A", var(i));
      if (filter_below) q.relations.front().filter.push_back({"A", CompareOp::Lt, Value::integer(*filter_below)});
      q.output = {"A"};
      q.aggregate = AggregateSpec{RingKind::Counting, {"A"}};
      break;
  }
  return q;
}

std::vector<UpdateEvent> window_stream(const std::vector<Edge>& edges, std::optional<std::size_t> window,
                                       const std::string& relation) {
  std::vector<UpdateEvent> out;
  auto ev = [&](const Edge& e, Sign s, std::size_t ts) {
    out.push_back({relation, {Value::integer(e.first), Value::integer(e.second)}, s, static_cast<std::int64_t>(ts), {}});
  };
  for (std::size_t i = 0; i < edges.size(); ++i) {
    // Deletions first at equal timestamps so the window holds exactly `window` edges.
    if (window && i >= *window) ev(edges[i - *window], Sign::Delete, i);
    ev(edges[i], Sign::Insert, i);
  }
  return out;
}

Workload generate_workload(GraphQueryShape shape, const std::vector<Edge>& edges, std::optional<std::size_t> window,
                           double selectivity) {
  std::optional<std::int64_t> below;
  if (selectivity < 1.0) {
    std::set<std::int64_t> vs;
    for (const auto& [s, d] : edges) {
      vs.insert(s);
      vs.insert(d);
    }
    std::vector<std::int64_t> sorted(vs.begin(), vs.end());
    const auto keep = static_cast<std::size_t>(std::max(0.0, selectivity) * static_cast<double>(sorted.size()));
    below = keep < sorted.size() ? sorted[keep] : sorted.empty() ? 0 : sorted.back() + 1;
  }
  Workload w;
  w.spec = graph_query(shape, below);
  w.query = validate(w.spec);
  w.trace = window_stream(edges, window);
  return w;
}

std::vector<UpdateEvent> expand_events(const Query& q, const std::vector<UpdateEvent>& events) {
  std::vector<UpdateEvent> out;
  for (const auto& ev : events) {
    const auto targets = q.fan_out(ev.relation);
    if (targets.empty()) throw Error(ErrorCode::UnknownRelation, ev.relation);
    for (std::size_t i : targets) {
      const auto& r = q.relations[i];
      if (ev.tuple.size() != r.attrs.size() || !r.accepts(ev.tuple)) continue;
      UpdateEvent e = ev;
      e.relation = r.name;
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<std::string> logical_relations(const Query& q) {
  std::vector<std::string> out;
  for (const auto& r : q.relations) {
    const std::string& name = r.source.empty() ? r.name : r.source;
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

namespace {

struct RelationPool {
  std::string name;
  std::size_t arity = 0;
};

std::vector<RelationPool> pools(const Query& q) {
  std::vector<RelationPool> out;
  for (const auto& name : logical_relations(q)) {
    out.push_back({name, q.relations[q.fan_out(name).front()].attrs.size()});
  }
  return out;
}

Tuple random_tuple(std::size_t arity, std::int64_t domain, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> v(0, domain - 1);
  Tuple t;
  for (std::size_t i = 0; i < arity; ++i) t.push_back(Value::integer(v(rng)));
  return t;
}

}  // namespace

std::vector<UpdateEvent> random_trace(const Query& q, const RandomTraceOptions& opt, std::mt19937_64& rng) {
  const auto rels = pools(q);
  std::vector<std::vector<Tuple>> present(rels.size());
  std::uniform_int_distribution<std::size_t> pick_rel(0, rels.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<UpdateEvent> out;
  for (std::size_t i = 0; i < opt.events; ++i) {
    const std::size_t r = pick_rel(rng);
    auto& live = present[r];
    UpdateEvent ev;
    ev.relation = rels[r].name;
    ev.timestamp = static_cast<std::int64_t>(i);
    const double c = coin(rng);
    if (c < opt.noise_fraction) {
      // Possibly non-effective: a random tuple with a random sign.
      ev.tuple = random_tuple(rels[r].arity, opt.domain, rng);
      ev.sign = coin(rng) < 0.5 ? Sign::Insert : Sign::Delete;
    } else if (c < opt.noise_fraction + opt.delete_fraction && !live.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
      ev.tuple = live[pick(rng)];
      ev.sign = Sign::Delete;
    } else {
      ev.tuple = random_tuple(rels[r].arity, opt.domain, rng);
      ev.sign = Sign::Insert;
    }
    auto it = std::find(live.begin(), live.end(), ev.tuple);
    if (ev.sign == Sign::Insert && it == live.end()) live.push_back(ev.tuple);
    if (ev.sign == Sign::Delete && it != live.end()) live.erase(it);
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<UpdateEvent> random_insertion_trace(const Query& q, std::size_t events, std::int64_t domain,
                                                std::mt19937_64& rng) {
  const auto rels = pools(q);
  std::vector<std::set<Tuple>> present(rels.size());
  std::uniform_int_distribution<std::size_t> pick_rel(0, rels.size() - 1);
  std::vector<UpdateEvent> out;
  for (std::size_t attempts = 0; out.size() < events && attempts < events * 50; ++attempts) {
    const std::size_t r = pick_rel(rng);
    Tuple t = random_tuple(rels[r].arity, domain, rng);
    if (!present[r].insert(t).second) continue;
    out.push_back({rels[r].name, std::move(t), Sign::Insert, static_cast<std::int64_t>(out.size()), {}});
  }
  return out;
}

std::vector<UpdateEvent> random_fifo_trace(const Query& q, std::size_t events, std::size_t window,
                                           std::int64_t domain, std::mt19937_64& rng) {
  const auto rels = pools(q);
  std::vector<std::set<Tuple>> present(rels.size());
  std::vector<std::pair<std::size_t, Tuple>> queue;  // insertion order
  std::size_t head = 0;
  std::uniform_int_distribution<std::size_t> pick_rel(0, rels.size() - 1);
  std::vector<UpdateEvent> out;
  std::int64_t ts = 0;
  for (std::size_t attempts = 0; out.size() < events && attempts < events * 50; ++attempts) {
    const std::size_t r = pick_rel(rng);
    Tuple t = random_tuple(rels[r].arity, domain, rng);
    if (present[r].count(t)) continue;
    if (queue.size() - head >= window) {
      auto& [or_, ot] = queue[head++];
      present[or_].erase(ot);
      out.push_back({rels[or_].name, ot, Sign::Delete, ts++, {}});
    }
    present[r].insert(t);
    queue.emplace_back(r, t);
    out.push_back({rels[r].name, std::move(t), Sign::Insert, ts++, {}});
  }
  return out;
}

QuerySpec four_hop_spec() {
  QuerySpec s;
  s.relations = {{"R1", {"x1", "x2"}, {}, {}, {}},
                 {"R2", {"x2", "x3"}, {}, {}, {}},
                 {"R3", {"x3", "x4"}, {}, {}, {}},
                 {"R4", {"x4", "x5"}, {}, {}, {}}};
  s.output = {"x1", "x2", "x3", "x4"};
  return s;
}

QuerySpec two_path_spec(std::vector<std::string> output) {
  QuerySpec s;
  s.relations = {{"R1", {"x1", "x2"}, {}, {}, {}}, {"R2", {"x2", "x3"}, {}, {}, {}}};
  s.output = std::move(output);
  return s;
}

std::vector<UpdateEvent> layered_insertion_trace(std::size_t n) {
  std::vector<UpdateEvent> out;
  const auto N = static_cast<std::int64_t>(n);
  for (const char* rel : {"R2", "R3", "R4", "R1"}) {
    for (std::int64_t i = 0; i < N; ++i) {
      for (std::int64_t j = 0; j < N; ++j) {
        out.push_back({rel, {Value::integer(i), Value::integer(j)}, Sign::Insert,
                       static_cast<std::int64_t>(out.size()), {}});
      }
    }
  }
  return out;
}

std::vector<UpdateEvent> nested_lifespan_trace(std::size_t n) {
  std::vector<UpdateEvent> out;
  std::int64_t ts = 0;
  const auto m = static_cast<std::int64_t>(4 * n);
  auto tup = [](std::int64_t a, std::int64_t b) { return Tuple{Value::integer(a), Value::integer(b)}; };
  // Long tuples use x2 = 0, short ones x2 = 1; other values keep tuples distinct.
  for (std::int64_t i = 0; i < m; ++i) {
    out.push_back({"R1", tup(i, 0), Sign::Insert, ts++, {}});
    out.push_back({"R2", tup(0, i), Sign::Insert, ts++, {}});
  }
  for (std::int64_t i = 0; i < m; ++i) {
    out.push_back({"R1", tup(i, 1), Sign::Insert, ts++, {}});
    out.push_back({"R1", tup(i, 1), Sign::Delete, ts++, {}});
    out.push_back({"R2", tup(1, i), Sign::Insert, ts++, {}});
    out.push_back({"R2", tup(1, i), Sign::Delete, ts++, {}});
  }
  for (std::int64_t i = 0; i < m; ++i) {
    out.push_back({"R1", tup(i, 0), Sign::Delete, ts++, {}});
    out.push_back({"R2", tup(0, i), Sign::Delete, ts++, {}});
  }
  return out;
}

}  // namespace ivm
