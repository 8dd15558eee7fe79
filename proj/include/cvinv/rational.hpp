#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include "cvinv/error.hpp"

namespace cvinv {

// Exact rational on int64 with overflow checks. Always reduced, den > 0.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n) {}  // NOLINT: implicit from integers is the point
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
    if (d == 0) throw Error(ErrorCode::InvalidArgument, "rational with zero denominator");
    reduce();
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  double to_double() const { return double(num_) / double(den_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    const std::int64_t da = b.den_ / g, db = a.den_ / g;
    return Rational(add(mul(a.num_, da), mul(b.num_, db)), mul(a.den_, da));
  }
  friend Rational operator-(const Rational& a) { return Rational(mul(a.num_, -1), a.den_); }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    // cross-reduce first to keep intermediates small
    const std::int64_t g1 = std::gcd(a.num_, b.den_), g2 = std::gcd(b.num_, a.den_);
    const std::int64_t n1 = g1 ? a.num_ / g1 : 0, d2 = g1 ? b.den_ / g1 : b.den_;
    const std::int64_t n2 = g2 ? b.num_ / g2 : 0, d1 = g2 ? a.den_ / g2 : a.den_;
    return Rational(mul(n1, n2), mul(d1, d2));
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw Error(ErrorCode::InvalidArgument, "rational division by zero");
    return a * Rational(b.den_, b.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  friend bool operator==(const Rational& a, const Rational& b) { return a.num_ == b.num_ && a.den_ == b.den_; }

  std::string str() const { return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_); }
  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  static std::int64_t mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::InvalidArgument, "rational overflow");
    return r;
  }
  static std::int64_t add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorCode::InvalidArgument, "rational overflow");
    return r;
  }
  void reduce() {
    if (den_ < 0) num_ = mul(num_, -1), den_ = mul(den_, -1);
    const std::int64_t g = std::gcd(num_, den_);
    if (g > 1) num_ /= g, den_ /= g;
    if (num_ == 0) den_ = 1;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace cvinv
