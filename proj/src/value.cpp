#include "ivm/value.hpp"

#include <charconv>
#include <deque>
#include <mutex>
#include <unordered_map>

#include "ivm/error.hpp"

namespace ivm {

namespace {

class StringPool {
 public:
  static StringPool& instance() {
    static StringPool pool;
    return pool;
  }

  std::int64_t intern(std::string_view s) {
    std::lock_guard lock(mu_);
    auto it = ids_.find(std::string(s));
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<std::int64_t>(strings_.size());
    strings_.emplace_back(s);
    ids_.emplace(strings_.back(), id);
    return id;
  }

  std::string_view lookup(std::int64_t id) {
    std::lock_guard lock(mu_);
    return strings_.at(static_cast<std::size_t>(id));
  }

 private:
  std::mutex mu_;
  std::deque<std::string> strings_;
  std::unordered_map<std::string, std::int64_t> ids_;
};

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Value Value::string(std::string_view s) {
  return Value(ValueKind::Str, StringPool::instance().intern(s));
}

std::string_view Value::as_string() const {
  return StringPool::instance().lookup(bits_);
}

std::size_t Value::hash() const {
  return mix(static_cast<std::uint64_t>(bits_) * 4 + static_cast<std::uint64_t>(kind_));
}

std::string Value::to_string() const {
  switch (kind_) {
    case ValueKind::Int:
      return std::to_string(bits_);
    case ValueKind::Str:
      return std::string(as_string());
    case ValueKind::Null:
      return "NULL";
  }
  return {};
}

std::size_t TupleHash::operator()(const Tuple& t) const {
  std::uint64_t h = t.size();
  for (const auto& v : t) h = mix(h ^ v.hash());
  return h;
}

int compare_values(const Value& a, const Value& b) {
  if (a.kind() != b.kind()) {
    throw Error(ErrorCode::TypeMismatch,
                "cannot compare " + a.to_string() + " with " + b.to_string());
  }
  if (a.kind() == ValueKind::Int) {
    return a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
  }
  if (a.kind() == ValueKind::Str) {
    const int c = a.as_string().compare(b.as_string());
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  return 0;
}

bool joinable(const Tuple& t) {
  for (const auto& v : t) {
    if (v.is_null()) return false;
  }
  return true;
}

Tuple project(const Tuple& t, std::span<const int> positions) {
  Tuple out;
  out.reserve(positions.size());
  for (int p : positions) out.push_back(t[static_cast<std::size_t>(p)]);
  return out;
}

std::string to_string(const Tuple& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) s += ",";
    s += t[i].to_string();
  }
  return s + ")";
}

Value parse_value(std::string_view text) {
  if (text == "NULL") return Value::null();
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec == std::errc() && ptr == end && !text.empty()) return Value::integer(v);
  return Value::string(text);
}

}  // namespace ivm
