#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace bfo {

/// Exact arbitrary-precision rational. Ownership amounts must never round,
/// so the whole toolchain uses this type instead of floating point.
class Rational {
 public:
  using Backing = boost::multiprecision::cpp_rational;

  Rational() = default;
  Rational(long long n) : v_(n) {}
  Rational(long long num, long long den) : v_(Backing(num) / Backing(den)) {}
  explicit Rational(Backing v) : v_(std::move(v)) {}

  /// Accepts "2", "-3", "0.5", "1/3", "-7/4". Empty result on malformed input.
  static std::optional<Rational> parse(std::string_view text);

  /// Prints the shortest faithful form: an integer when the denominator is 1,
  /// a finite decimal when the denominator is 2^a * 5^b (so "0.5", "0.25"),
  /// otherwise "p/q".
  std::string str() const;

  bool is_zero() const { return v_ == 0; }
  bool is_integer() const;
  /// Valid only when is_integer() and the value fits in long long.
  long long as_integer() const;

  const Backing& raw() const { return v_; }

  friend Rational operator+(const Rational& a, const Rational& b) { return Rational(a.v_ + b.v_); }
  friend Rational operator-(const Rational& a, const Rational& b) { return Rational(a.v_ - b.v_); }
  friend Rational operator*(const Rational& a, const Rational& b) { return Rational(a.v_ * b.v_); }
  friend Rational operator/(const Rational& a, const Rational& b) { return Rational(Backing(a.v_ / b.v_)); }
  Rational& operator+=(const Rational& b) {
    v_ += b.v_;
    return *this;
  }
  Rational& operator-=(const Rational& b) {
    v_ -= b.v_;
    return *this;
  }
  friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
  friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
  friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
  friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

 private:
  Backing v_ = 0;
};

}  // namespace bfo
