#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pwn {

/// Exact arbitrary-precision rational. Always kept in lowest terms.
using rational = mpq_class;

/// Parses "p/q" or "n" (optional leading minus). Throws std::invalid_argument
/// on malformed input or zero denominator.
inline rational parse_rational(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty rational");
  std::size_t pos = 0;
  if (text[0] == '-') pos = 1;
  bool digits = false, slash = false, denom_digits = false;
  for (std::size_t k = pos; k < text.size(); ++k) {
    char c = text[k];
    if (c == '/') {
      if (slash || !digits) throw std::invalid_argument("malformed rational: " + std::string(text));
      slash = true;
    } else if (c >= '0' && c <= '9') {
      (slash ? denom_digits : digits) = true;
    } else {
      throw std::invalid_argument("malformed rational: " + std::string(text));
    }
  }
  if (!digits || (slash && !denom_digits))
    throw std::invalid_argument("malformed rational: " + std::string(text));
  rational r(std::string(text), 10);
  if (r.get_den() == 0) throw std::invalid_argument("zero denominator: " + std::string(text));
  r.canonicalize();
  return r;
}

/// Lowest-terms decimal rendering: "p/q", or just "n" when the denominator is 1.
inline std::string to_string(const rational& r) { return r.get_str(); }

/// A rational extended with a single absorbing +infinity, used for expected
/// rewards of unsound nets.
class extended_rational {
 public:
  extended_rational() : finite_(true), value_(0) {}
  extended_rational(rational v) : finite_(true), value_(std::move(v)) {}
  extended_rational(long v) : finite_(true), value_(v) {}

  static extended_rational infinity() {
    extended_rational e;
    e.finite_ = false;
    return e;
  }

  bool is_finite() const { return finite_; }

  /// Finite value; only meaningful when is_finite().
  const rational& value() const { return value_; }

  extended_rational& operator+=(const extended_rational& o) {
    if (!o.finite_) finite_ = false;
    if (finite_) value_ += o.value_;
    return *this;
  }
  friend extended_rational operator+(extended_rational a, const extended_rational& b) {
    a += b;
    return a;
  }
  friend extended_rational operator*(const rational& c, const extended_rational& v) {
    if (!v.finite_) {
      if (c == 0) return extended_rational(0);  // 0 * inf = 0 in reachability sums
      return infinity();
    }
    rational r = c * v.value_;
    return extended_rational(r);
  }

  friend bool operator==(const extended_rational& a, const extended_rational& b) {
    if (a.finite_ != b.finite_) return false;
    return !a.finite_ || a.value_ == b.value_;
  }
  friend bool operator!=(const extended_rational& a, const extended_rational& b) { return !(a == b); }
  friend bool operator<(const extended_rational& a, const extended_rational& b) {
    if (!a.finite_) return false;
    if (!b.finite_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator>(const extended_rational& a, const extended_rational& b) { return b < a; }

  std::string str() const { return finite_ ? value_.get_str() : "inf"; }

 private:
  bool finite_;
  rational value_;
};

}  // namespace pwn
