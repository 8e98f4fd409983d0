#include "ivm/ring.hpp"

#include <cmath>
#include <sstream>

#include "ivm/error.hpp"

namespace ivm {

namespace {

bool is_float(RingKind k) { return k == RingKind::FloatSum; }

}  // namespace

RingValue Ring::zero() const {
  if (is_float(kind_)) return 0.0;
  return std::int64_t{0};
}

RingValue Ring::one() const {
  if (is_float(kind_)) return 1.0;
  return std::int64_t{1};
}

void Ring::check(const RingValue& v) const {
  const bool holds_float = std::holds_alternative<double>(v);
  if (holds_float != is_float(kind_)) {
    throw Error(ErrorCode::RingMismatch,
                "annotation " + to_string(v) + " does not belong to ring " + ring_name(kind_));
  }
}

RingValue Ring::add(const RingValue& a, const RingValue& b) const {
  if (is_float(kind_)) return std::get<double>(a) + std::get<double>(b);
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(std::get<std::int64_t>(a)) +
                                   static_cast<std::uint64_t>(std::get<std::int64_t>(b)));
}

RingValue Ring::neg(const RingValue& a) const {
  if (is_float(kind_)) return -std::get<double>(a);
  return static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(std::get<std::int64_t>(a)));
}

RingValue Ring::mul(const RingValue& a, const RingValue& b) const {
  if (is_float(kind_)) return std::get<double>(a) * std::get<double>(b);
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(std::get<std::int64_t>(a)) *
                                   static_cast<std::uint64_t>(std::get<std::int64_t>(b)));
}

bool Ring::is_zero(const RingValue& a) const {
  if (is_float(kind_)) return std::get<double>(a) == 0.0;
  return std::get<std::int64_t>(a) == 0;
}

RingValue Ring::lift(const Value& payload) const {
  switch (kind_) {
    case RingKind::Counting:
      return std::int64_t{1};
    case RingKind::IntSum:
      if (payload.kind() != ValueKind::Int) {
        throw Error(ErrorCode::RingMismatch, "integer ring needs an integer payload, got " +
                                                 payload.to_string());
      }
      return payload.as_int();
    case RingKind::FloatSum:
      if (payload.kind() != ValueKind::Int) {
        throw Error(ErrorCode::RingMismatch, "float ring needs a numeric payload, got " +
                                                 payload.to_string());
      }
      return static_cast<double>(payload.as_int());
  }
  return one();
}

std::string ring_name(RingKind kind) {
  switch (kind) {
    case RingKind::Counting: return "count";
    case RingKind::IntSum: return "sum";
    case RingKind::FloatSum: return "float_sum";
  }
  return "count";
}

RingKind parse_ring(std::string_view name) {
  if (name == "count") return RingKind::Counting;
  if (name == "sum") return RingKind::IntSum;
  if (name == "float_sum") return RingKind::FloatSum;
  throw Error(ErrorCode::MalformedQuery, "unknown ring '" + std::string(name) + "'");
}

std::string to_string(const RingValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  std::ostringstream os;
  os.precision(17);
  os << std::get<double>(v);
  return os.str();
}

}  // namespace ivm
