#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>

#include "ivm/enclosureness.hpp"
#include "ivm/error.hpp"
#include "ivm/io.hpp"
#include "ivm/join_tree.hpp"
#include "ivm/runner.hpp"
#include "ivm/workload.hpp"

using namespace ivm;

namespace {

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string flags(const QueryClass& c) {
  return std::string("acyclic=") + (c.acyclic ? "yes" : "no") + " free_connex=" + (c.free_connex ? "yes" : "no") +
         " q_hierarchical=" + (c.q_hierarchical ? "yes" : "no");
}

int cmd_plan(const std::string& query_path, const std::string& trace_path, bool all) {
  const Query q = validate(read_query_file(query_path));
  std::cout << "class: " << flags(classify(q)) << '\n';
  const auto ext = make_free_connex(q);
  if (!ext.added.empty()) {
    std::string added;
    for (AttrId a : ext.added) added += (added.empty() ? "" : ",") + ext.query.attr_names[a];
    std::cout << "output extended with: " << added << " (projected away during enumeration)\n";
  }
  UpdateCounts counts;
  if (!trace_path.empty()) {
    for (const auto& ev : expand_events(ext.query, read_trace_file(trace_path, q))) ++counts[ev.relation];
  }
  const auto chosen = choose_plan_tree(ext.query, counts);
  std::cout << "plan: " << chosen.canonical(ext.query) << " height=" << chosen.height() << '\n'
            << render_tree(chosen, ext.query);
  if (all) {
    const auto trees = enumerate_trees(ext.query);
    std::cout << "trees:\n";
    for (std::size_t i = 0; i < trees.size(); ++i) {
      std::cout << "  " << std::setw(3) << i << "  height=" << trees[i].height()
                << " score=" << score_tree(trees[i], ext.query, counts) << "  " << trees[i].canonical(ext.query) << '\n';
    }
  }
  return 0;
}

int cmd_run(const std::string& query_path, const std::string& trace_path, const std::string& mode,
            bool verify, const std::string& tree, std::size_t prefix, const std::string& out_path) {
  const Query q = validate(read_query_file(query_path));
  const auto trace = read_trace_file(trace_path, q);
  RunOptions opt;
  opt.verify = verify;
  opt.prefix = prefix;
  opt.check_space = true;
  if (mode == "delta") {
    opt.mode = RunMode::Delta;
  } else if (mode == "agg") {
    opt.mode = RunMode::Aggregate;
  } else if (mode.rfind("full", 0) == 0) {
    opt.mode = RunMode::Full;
    if (mode.size() > 5 && mode[4] == ':') {
      try {
        opt.full_every = std::stoul(mode.substr(5));
      } catch (const std::exception&) {
        throw Usage("bad --mode " + mode);
      }
    } else if (mode != "full") {
      throw Usage("bad --mode " + mode);
    }
  } else {
    throw Usage("bad --mode " + mode);
  }
  if (tree != "auto") {
    try {
      opt.tree_index = std::stoul(tree);
    } catch (const std::exception&) {
      throw Usage("--tree expects auto or an index");
    }
  }
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    opt.out = &file;
  } else {
    opt.out = &std::cout;
  }
  const RunReport r = run(q, trace, opt);
  opt.out->flush();
  write_metrics(std::cerr, r);
  if (verify && r.verify_disabled) std::cerr << "note: verification stopped above " << opt.verify_limit << " base tuples\n";
  return verify && r.mismatches > 0 ? 2 : 0;
}

double upper_value(const LambdaReport& r) {
  if (r.per_tuple.empty()) return 1.0;
  return std::max(1.0, static_cast<double>(r.upper_total) / static_cast<double>(r.per_tuple.size()));
}

int cmd_enclosureness(const std::string& query_path, const std::string& trace_path, bool serial) {
  const Query q = validate(read_query_file(query_path));
  const auto ext = make_free_connex(q);
  const auto events = expand_events(ext.query, read_trace_file(trace_path, q));
  const auto spans = lifespans(order_events(events));
  const Exec exec = serial ? Exec::Serial : Exec::Parallel;
  const auto cls = classify_sequence(spans);
  const auto classic = classic_lambda(spans, exec);
  std::cout << "tuples=" << spans.size() << " fifo=" << cls.fifo << " insertion_only=" << cls.insertion_only
            << " deletion_only=" << cls.deletion_only << '\n';
  std::cout << "classic_lambda=" << classic.value() << '\n';
  std::cout << std::left << std::setw(6) << "tree" << std::setw(10) << "lambda_T" << std::setw(8) << "height"
            << std::setw(7) << "exact" << std::setw(10) << "upper" << "plan\n";
  const auto trees = enumerate_trees(ext.query);
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto lt = tree_lambda(spans, trees[i], ext.query, exec);
    std::cout << std::setw(6) << i << std::setw(10) << lt.value() << std::setw(8) << trees[i].height() << std::setw(7)
              << (lt.exact ? "yes" : "no") << std::setw(10) << upper_value(lt) << trees[i].canonical(ext.query) << '\n';
  }
  return 0;
}

struct GenArgs {
  std::string kind;
  std::string graph;
  std::string query;
  std::size_t edges = 1000;
  std::size_t vertices = 0;
  std::size_t events = 200;
  std::int64_t domain = 3;
  long long window = -1;
  double selectivity = 1.0;
  std::uint64_t seed = 1;
  std::string query_out;
  std::string trace_out;
};

void write_to(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_gen(const GenArgs& a) {
  std::ostringstream trace;
  if (a.kind == "random") {
    if (a.query.empty()) throw Usage("gen random needs --query");
    const Query q = validate(read_query_file(a.query));
    std::mt19937_64 rng(a.seed);
    RandomTraceOptions opt;
    opt.events = a.events;
    opt.domain = a.domain;
    write_trace(trace, random_trace(q, opt, rng));
    write_to(a.trace_out, trace.str());
    return 0;
  }
  const auto shape = parse_graph_query_kind(a.kind);
  const auto edges = a.graph.empty() ? synthetic_graph(a.edges, a.vertices ? a.vertices : std::max<std::size_t>(2, a.edges / 2), a.seed)
                                     : read_edge_list(a.graph);
  std::optional<std::size_t> window;
  if (a.window >= 0) window = static_cast<std::size_t>(a.window);
  const Workload w = generate_workload(shape, edges, window, a.selectivity);
  write_trace(trace, w.trace);
  if (!a.query_out.empty()) write_to(a.query_out, query_to_json(w.spec) + "\n");
  write_to(a.trace_out, trace.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental maintenance of acyclic conjunctive queries"};
  app.require_subcommand(1);

  std::string query, trace, mode = "delta", tree = "auto", out;
  bool verify = false, all = false, serial = false;
  std::size_t prefix = 1000;

  auto* plan = app.add_subcommand("plan", "Classify a query and show its join trees");
  plan->add_option("query", query, "query JSON")->required();
  plan->add_option("--trace", trace, "trace used to weight the tree choice");
  plan->add_flag("--all", all, "list every enumerated tree");

  auto* runc = app.add_subcommand("run", "Maintain a query over a trace");
  runc->add_option("query", query, "query JSON")->required();
  runc->add_option("trace", trace, "trace file")->required();
  runc->add_option("--mode", mode, "delta | full[:k] | agg");
  runc->add_flag("--verify", verify, "compare against the brute-force oracle");
  runc->add_option("--tree", tree, "auto or an index from `plan --all`");
  runc->add_option("--prefix", prefix, "events counted to weight the tree choice");
  runc->add_option("--out", out, "write the result stream here instead of stdout");

  auto* enc = app.add_subcommand("enclosureness", "Enclosureness of a trace per join tree");
  enc->add_option("query", query, "query JSON")->required();
  enc->add_option("trace", trace, "trace file")->required();
  enc->add_flag("--serial", serial, "single-threaded computation");

  GenArgs g;
  auto* gen = app.add_subcommand("gen", "Generate a workload");
  gen->add_option("kind", g.kind, "3hop | 4hop | 4hop-projected | star | chain-<k> | random")->required();
  gen->add_option("--graph", g.graph, "edge list (src dst per line)");
  gen->add_option("--edges", g.edges, "synthetic graph edges");
  gen->add_option("--vertices", g.vertices, "synthetic graph vertices (default edges/2)");
  gen->add_option("--window", g.window, "sliding window in edges (default: insertion only)");
  gen->add_option("--selectivity", g.selectivity, "fraction of endpoints kept by the filter");
  gen->add_option("--seed", g.seed, "random seed");
  gen->add_option("--query", g.query, "query JSON (random traces)");
  gen->add_option("--events", g.events, "events (random traces)");
  gen->add_option("--domain", g.domain, "values per attribute (random traces)");
  gen->add_option("--query-out", g.query_out, "write the generated query here");
  gen->add_option("--trace-out", g.trace_out, "write the trace here (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*plan) return cmd_plan(query, trace, all);
    if (*runc) return cmd_run(query, trace, mode, verify, tree, prefix, out);
    if (*enc) return cmd_enclosureness(query, trace, serial);
    if (*gen) return cmd_gen(g);
  } catch (const Usage& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
