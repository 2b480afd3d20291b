#pragma once

#include <cmath>
#include <compare>
#include <ostream>

#include "bmk/error.hpp"

namespace bmk {

/// A real number or +infinity. Negative infinity is not representable, and a
/// non-finite double is rejected at construction instead of being carried
/// along silently.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  ExtendedReal(double v) : value_(v) {  // NOLINT(google-explicit-constructor)
    if (!std::isfinite(v)) throw DomainError("ExtendedReal: non-finite double " + std::to_string(v));
  }
  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }
  double value() const {
    if (infinite_) throw DomainError("ExtendedReal: value() of +inf");
    return value_;
  }
  /// The finite value, or `fallback` for +inf.
  constexpr double value_or(double fallback) const { return infinite_ ? fallback : value_; }

  friend ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return ExtendedReal(a.value_ + b.value_);
  }
  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }
  friend std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
    if (a.infinite_) return std::partial_ordering::greater;
    if (b.infinite_) return std::partial_ordering::less;
    return a.value_ <=> b.value_;
  }
  friend std::ostream& operator<<(std::ostream& os, const ExtendedReal& e) {
    if (e.infinite_) return os << "inf";
    return os << e.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

inline ExtendedReal max(const ExtendedReal& a, const ExtendedReal& b) { return a < b ? b : a; }
inline ExtendedReal min(const ExtendedReal& a, const ExtendedReal& b) { return b < a ? b : a; }

}  // namespace bmk
