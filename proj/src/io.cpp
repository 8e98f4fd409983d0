#include "ivm/io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ivm/error.hpp"

namespace ivm {

using nlohmann::json;

namespace {

Value value_from_json(const json& j) {
  if (j.is_null()) return Value::null();
  if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
  if (j.is_string()) return Value::string(j.get<std::string>());
  throw Error(ErrorCode::MalformedQuery, "filter value must be an integer, string or null");
}

json value_to_json(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return nullptr;
    case ValueKind::Int: return v.as_int();
    case ValueKind::Str: return std::string(v.as_string());
  }
  return nullptr;
}

std::vector<std::string> string_list(const json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorCode::MalformedQuery, std::string(what) + " must be an array");
  std::vector<std::string> out;
  for (const auto& x : j) {
    if (!x.is_string()) throw Error(ErrorCode::MalformedQuery, std::string(what) + " entries must be strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

QuerySpec parse_query_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedQuery, e.what());
  }
  if (!j.is_object() || !j.contains("relations")) throw Error(ErrorCode::MalformedQuery, "missing \"relations\"");
  QuerySpec spec;
  try {
    for (const auto& r : j.at("relations")) {
      RelationSpec rs;
      rs.name = r.at("name").get<std::string>();
      rs.attrs = string_list(r.at("attrs"), "attrs");
      if (r.contains("filter")) {
        for (const auto& p : r.at("filter")) {
          rs.filter.push_back({p.at("attr").get<std::string>(), parse_compare_op(p.at("op").get<std::string>()),
                               p.contains("value") ? value_from_json(p.at("value")) : Value::null()});
        }
      }
      if (r.contains("source")) rs.source = r.at("source").get<std::string>();
      if (r.contains("annotation")) rs.annotation = r.at("annotation").get<std::size_t>();
      spec.relations.push_back(std::move(rs));
    }
    if (j.contains("output")) spec.output = string_list(j.at("output"), "output");
    if (j.contains("aggregate")) {
      const auto& a = j.at("aggregate");
      AggregateSpec agg;
      agg.ring = parse_ring(a.value("ring", std::string("count")));
      if (a.contains("group_by")) agg.group_by = string_list(a.at("group_by"), "group_by");
      spec.aggregate = agg;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedQuery, e.what());
  }
  return spec;
}

std::string query_to_json(const QuerySpec& spec) {
  json j;
  j["relations"] = json::array();
  for (const auto& r : spec.relations) {
    json jr{{"name", r.name}, {"attrs", r.attrs}};
    if (!r.filter.empty()) {
      jr["filter"] = json::array();
      for (const auto& p : r.filter) {
        jr["filter"].push_back({{"attr", p.attr}, {"op", std::string(compare_op_symbol(p.op))}, {"value", value_to_json(p.constant)}});
      }
    }
    if (!r.source.empty()) jr["source"] = r.source;
    if (r.annotation) jr["annotation"] = *r.annotation;
    j["relations"].push_back(std::move(jr));
  }
  j["output"] = spec.output;
  if (spec.aggregate) j["aggregate"] = {{"ring", ring_name(spec.aggregate->ring)}, {"group_by", spec.aggregate->group_by}};
  return j.dump(2);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

QuerySpec read_query_file(const std::string& path) { return parse_query_json(read_text_file(path)); }

std::vector<UpdateEvent> parse_trace(const std::string& text, const Query& q) {
  std::vector<UpdateEvent> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto fields = split_csv(line);
    auto fail = [&](const std::string& msg) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + msg);
    };
    if (fields.size() < 2 || (fields[0] != "+" && fields[0] != "-")) fail("expected '+' or '-' and a relation");
    const auto targets = q.fan_out(fields[1]);
    if (targets.empty()) throw Error(ErrorCode::UnknownRelation, fields[1]);
    const std::size_t arity = q.relations[targets.front()].attrs.size();
    const std::size_t given = fields.size() - 2;
    if (given != arity && given != arity + 1) {
      fail("relation " + fields[1] + " expects " + std::to_string(arity) + " values");
    }
    UpdateEvent ev;
    ev.sign = fields[0] == "+" ? Sign::Insert : Sign::Delete;
    ev.relation = fields[1];
    for (std::size_t i = 0; i < arity; ++i) ev.tuple.push_back(parse_value(fields[2 + i]));
    ev.timestamp = static_cast<std::int64_t>(out.size());
    if (given == arity + 1) {
      const Value ts = parse_value(fields.back());
      if (ts.kind() != ValueKind::Int) fail("timestamp must be an integer");
      ev.timestamp = ts.as_int();
    }
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<UpdateEvent> read_trace_file(const std::string& path, const Query& q) {
  return parse_trace(read_text_file(path), q);
}

void write_trace(std::ostream& os, const std::vector<UpdateEvent>& events) {
  for (const auto& ev : events) {
    os << sign_char(ev.sign) << ',' << ev.relation;
    for (const auto& v : ev.tuple) os << ',' << v.to_string();
    os << ',' << ev.timestamp << '\n';
  }
}

std::string delta_line(Sign sign, const Tuple& t) {
  std::string s(1, sign_char(sign));
  for (const auto& v : t) {
    s += ',';
    s += v.to_string();
  }
  return s;
}

}  // namespace ivm
