#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <iosfwd>
#include <string>

namespace teamdiag {

/// Exact rational number. All responsibility/blame verdicts are computed in
/// exact arithmetic; decimal output is rendering only.
class Rational {
 public:
  using Backend = boost::multiprecision::cpp_rational;

  Rational() = default;
  Rational(long long value) : value_(value) {}  // NOLINT(google-explicit-constructor)
  Rational(long long num, long long den);
  explicit Rational(Backend value) : value_(std::move(value)) {}

  /// Parses "3", "-2/5", "0.125" (decimal digits are exact: 0.1 -> 1/10),
  /// with optional surrounding whitespace.
  static Rational parse(const std::string& text);

  Rational operator+(const Rational& o) const { return Rational(Backend(value_ + o.value_)); }
  Rational operator-(const Rational& o) const { return Rational(Backend(value_ - o.value_)); }
  Rational operator*(const Rational& o) const { return Rational(Backend(value_ * o.value_)); }
  Rational operator/(const Rational& o) const;
  Rational& operator+=(const Rational& o) { value_ += o.value_; return *this; }
  Rational& operator*=(const Rational& o) { value_ *= o.value_; return *this; }

  bool operator==(const Rational& o) const { return value_ == o.value_; }
  bool operator!=(const Rational& o) const { return value_ != o.value_; }
  bool operator<(const Rational& o) const { return value_ < o.value_; }
  bool operator<=(const Rational& o) const { return value_ <= o.value_; }
  bool operator>(const Rational& o) const { return value_ > o.value_; }
  bool operator>=(const Rational& o) const { return value_ >= o.value_; }

  bool is_zero() const { return value_.is_zero(); }

  std::string numerator_str() const;
  std::string denominator_str() const;

  /// "num/den" (or just "num" when den == 1).
  std::string to_string() const;

  /// Fixed-point decimal with `places` digits, rounded half away from zero.
  /// Display only; never feed back into arithmetic.
  std::string to_decimal(int places = 6) const;

  const Backend& backend() const { return value_; }

 private:
  Backend value_;
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

}  // namespace teamdiag
