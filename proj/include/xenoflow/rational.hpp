#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace xenoflow {

// Exact non-negative rational used for service intervals and server clocks,
// so deterministic service never accumulates rounding drift.
class Rational {
 public:
  using Int = __int128;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n), den_(1) {}
  Rational(Int n, Int d) : num_(n), den_(d) {
    if (d <= 0) throw std::invalid_argument("rational denominator must be positive");
    reduce();
  }

  // Rounds to the nearest 1/1000.
  static Rational from_double(double v) {
    if (!std::isfinite(v) || v < 0) throw std::invalid_argument("rational from non-finite or negative value");
    return Rational(static_cast<Int>(std::llround(v * 1000.0)), 1000);
  }

  Int num() const { return num_; }
  Int den() const { return den_; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  Rational reciprocal() const {
    if (num_ == 0) throw std::domain_error("reciprocal of zero");
    return Rational(den_, num_);
  }

  std::int64_t floor() const {
    auto q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) --q;
    return static_cast<std::int64_t>(q);
  }
  std::int64_t ceil() const {
    auto q = num_ / den_;
    if (num_ % den_ != 0 && num_ > 0) ++q;
    return static_cast<std::int64_t>(q);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    if (a.den_ == b.den_) return raw(a.num_ + b.num_, a.den_);
    if (a.den_ == 1) return raw(a.num_ * b.den_ + b.num_, b.den_);
    if (b.den_ == 1) return raw(a.num_ + b.num_ * a.den_, a.den_);
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.num_, a.den_ * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) { return a * b.reciprocal(); }

  friend bool operator==(const Rational& a, const Rational& b) { return a.num_ * b.den_ == b.num_ * a.den_; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    Int l = a.num_ * b.den_;
    Int r = b.num_ * a.den_;
    if (l < r) return std::strong_ordering::less;
    if (l > r) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  static Rational raw(Int n, Int d) {
    Rational r;
    r.num_ = n;
    r.den_ = d;
    return r;
  }

  static Int gcd(Int a, Int b) {
    if (a < 0) a = -a;
    while (b != 0) {
      Int t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  void reduce() {
    Int g = gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  Int num_ = 0;
  Int den_ = 1;
};

inline Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

}  // namespace xenoflow
