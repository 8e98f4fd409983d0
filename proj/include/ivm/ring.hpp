#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "ivm/value.hpp"

namespace ivm {

enum class RingKind { Counting, IntSum, FloatSum };

using RingValue = std::variant<std::int64_t, double>;

// Commutative ring with additive inverses. Counting and IntSum share integer
// arithmetic; FloatSum is approximate.
class Ring {
 public:
  explicit Ring(RingKind kind = RingKind::Counting) : kind_(kind) {}

  RingKind kind() const { return kind_; }
  bool exact() const { return kind_ != RingKind::FloatSum; }

  RingValue zero() const;
  RingValue one() const;
  RingValue add(const RingValue& a, const RingValue& b) const;
  RingValue neg(const RingValue& a) const;
  RingValue mul(const RingValue& a, const RingValue& b) const;
  RingValue sub(const RingValue& a, const RingValue& b) const { return add(a, neg(b)); }
  bool is_zero(const RingValue& a) const;

  // Annotation of a base tuple given the optional payload column value.
  RingValue lift(const Value& payload) const;
  // Throws RingMismatch if v does not belong to this ring.
  void check(const RingValue& v) const;

 private:
  RingKind kind_;
};

std::string ring_name(RingKind kind);
RingKind parse_ring(std::string_view name);
std::string to_string(const RingValue& v);

}  // namespace ivm
