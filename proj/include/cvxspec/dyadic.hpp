#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace cvxspec {

/// Thrown when an exponent leaves the supported range |e| <= 2^60.
class DyadicRangeError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Result of converting a dyadic value to the nearest double.
struct FloatConversion {
  enum class Status { Exact, Rounded, Underflow, Overflow };
  double value = 0.0;
  Status status = Status::Exact;

  bool exact() const { return status == Status::Exact; }
};

/// Exact value mantissa * 2^exponent with an arbitrary-precision mantissa.
///
/// Always normalized: the mantissa is odd, or zero with exponent zero. Values
/// are immutable once built; all arithmetic returns fresh normalized values.
class Dyadic {
 public:
  static constexpr std::int64_t kMaxExponent = std::int64_t{1} << 60;

  Dyadic() = default;
  Dyadic(long mantissa, std::int64_t exponent = 0);  // NOLINT(google-explicit-constructor)
  Dyadic(mpz_class mantissa, std::int64_t exponent);

  /// 2^e.
  static Dyadic pow2(std::int64_t e);
  /// Every finite double is a dyadic rational; the conversion is exact.
  static Dyadic from_double(double v);
  /// Parses the "m*2^e" form (decimal mantissa, decimal exponent). A bare
  /// integer "m" is accepted as m*2^0.
  static Dyadic parse(std::string_view text);

  const mpz_class& mantissa() const { return mantissa_; }
  std::int64_t exponent() const { return exponent_; }
  bool is_zero() const { return mantissa_ == 0; }
  int sign() const { return sgn(mantissa_); }

  /// this * 2^k.
  Dyadic mul_pow2(std::int64_t k) const;
  /// floor(this * 2^k) as an integer.
  mpz_class floor_mul_pow2(std::int64_t k) const;
  /// Position of the leading bit: 2^top <= |x| < 2^(top+1). Zero has no top.
  std::int64_t top_bit() const;

  FloatConversion to_float() const;
  /// Shorthand for to_float().value; throws on overflow.
  double to_double() const;

  std::string to_string() const;

  friend Dyadic operator+(const Dyadic& a, const Dyadic& b);
  friend Dyadic operator-(const Dyadic& a, const Dyadic& b);
  friend Dyadic operator*(const Dyadic& a, const Dyadic& b);
  Dyadic operator-() const;
  Dyadic& operator+=(const Dyadic& o) { return *this = *this + o; }
  Dyadic& operator-=(const Dyadic& o) { return *this = *this - o; }
  Dyadic& operator*=(const Dyadic& o) { return *this = *this * o; }

  friend bool operator==(const Dyadic& a, const Dyadic& b) {
    return a.exponent_ == b.exponent_ && a.mantissa_ == b.mantissa_;
  }
  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b);

 private:
  void normalize();

  mpz_class mantissa_ = 0;
  std::int64_t exponent_ = 0;
};

/// Three-way comparison on real values.
inline std::strong_ordering dy_cmp(const Dyadic& a, const Dyadic& b) { return a <=> b; }

std::ostream& operator<<(std::ostream& os, const Dyadic& d);

}  // namespace cvxspec
