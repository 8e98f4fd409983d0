#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ivm/engine.hpp"
#include "ivm/query.hpp"

namespace ivm {

// {"relations":[{"name","attrs","filter"?:[{"attr","op","value"}],"source"?,"annotation"?}],
//  "output":[...], "aggregate"?:{"ring","group_by"}}
QuerySpec parse_query_json(const std::string& text);
std::string query_to_json(const QuerySpec& spec);
QuerySpec read_query_file(const std::string& path);

// One event per line: `+|-,relation,v1,...,vk[,timestamp]`. Blank lines and
// lines starting with '#' are skipped. The arity comes from the query, so a
// trailing extra field is the timestamp; otherwise the event's position is.
// Relation names may be logical sources of self-join copies.
std::vector<UpdateEvent> parse_trace(const std::string& text, const Query& q);
std::vector<UpdateEvent> read_trace_file(const std::string& path, const Query& q);
void write_trace(std::ostream& os, const std::vector<UpdateEvent>& events);

// `+,v1,...` for one delta tuple.
std::string delta_line(Sign sign, const Tuple& t);

std::string read_text_file(const std::string& path);

}  // namespace ivm
