#include "cvxspec/dyadic.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace cvxspec {

namespace {

std::int64_t checked_exponent(__int128 e) {
  if (e > Dyadic::kMaxExponent || e < -Dyadic::kMaxExponent) {
    throw DyadicRangeError("dyadic exponent outside +-2^60");
  }
  return static_cast<std::int64_t>(e);
}

mpz_class shifted_left(const mpz_class& m, std::int64_t k) {
  mpz_class out;
  mpz_mul_2exp(out.get_mpz_t(), m.get_mpz_t(), static_cast<mp_bitcnt_t>(k));
  return out;
}

}  // namespace

Dyadic::Dyadic(long mantissa, std::int64_t exponent) : mantissa_(mantissa), exponent_(checked_exponent(exponent)) {
  normalize();
}

Dyadic::Dyadic(mpz_class mantissa, std::int64_t exponent)
    : mantissa_(std::move(mantissa)), exponent_(checked_exponent(exponent)) {
  normalize();
}

void Dyadic::normalize() {
  if (mantissa_ == 0) {
    exponent_ = 0;
    return;
  }
  const mp_bitcnt_t tz = mpz_scan1(mantissa_.get_mpz_t(), 0);
  if (tz > 0) {
    mpz_fdiv_q_2exp(mantissa_.get_mpz_t(), mantissa_.get_mpz_t(), tz);
    exponent_ = checked_exponent(static_cast<__int128>(exponent_) + tz);
  }
}

Dyadic Dyadic::pow2(std::int64_t e) { return Dyadic(1L, e); }

Dyadic Dyadic::from_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("Dyadic::from_double: non-finite input");
  if (v == 0.0) return Dyadic();
  int e = 0;
  const double frac = std::frexp(v, &e);  // v = frac * 2^e, 0.5 <= |frac| < 1
  const double scaled = std::ldexp(frac, 53);
  mpz_class m;
  mpz_set_d(m.get_mpz_t(), scaled);
  return Dyadic(std::move(m), static_cast<std::int64_t>(e) - 53);
}

Dyadic Dyadic::parse(std::string_view text) {
  auto fail = [&] { return std::invalid_argument("malformed dyadic literal '" + std::string(text) + "'"); };
  const auto star = text.find("*2^");
  const std::string mant(text.substr(0, star));
  std::int64_t exp = 0;
  if (star != std::string_view::npos) {
    const std::string es(text.substr(star + 3));
    if (es.empty()) throw fail();
    std::size_t used = 0;
    try {
      exp = std::stoll(es, &used);
    } catch (const std::exception&) {
      throw fail();
    }
    if (used != es.size()) throw fail();
  }
  if (mant.empty()) throw fail();
  const std::size_t digits_from = (mant[0] == '-' || mant[0] == '+') ? 1 : 0;
  if (digits_from == mant.size()) throw fail();
  for (std::size_t i = digits_from; i < mant.size(); ++i) {
    if (mant[i] < '0' || mant[i] > '9') throw fail();
  }
  mpz_class m;
  if (m.set_str(mant[0] == '+' ? mant.substr(1) : mant, 10) != 0) throw fail();
  return Dyadic(std::move(m), exp);
}

Dyadic Dyadic::mul_pow2(std::int64_t k) const {
  if (is_zero()) return *this;
  return Dyadic(mantissa_, checked_exponent(static_cast<__int128>(exponent_) + k));
}

mpz_class Dyadic::floor_mul_pow2(std::int64_t k) const {
  const __int128 e = static_cast<__int128>(exponent_) + k;
  mpz_class out;
  if (e >= 0) {
    mpz_mul_2exp(out.get_mpz_t(), mantissa_.get_mpz_t(), static_cast<mp_bitcnt_t>(e));
  } else {
    mpz_fdiv_q_2exp(out.get_mpz_t(), mantissa_.get_mpz_t(), static_cast<mp_bitcnt_t>(-e));
  }
  return out;
}

std::int64_t Dyadic::top_bit() const {
  if (is_zero()) throw std::domain_error("Dyadic::top_bit of zero");
  return exponent_ + static_cast<std::int64_t>(mpz_sizeinbase(mantissa_.get_mpz_t(), 2)) - 1;
}

FloatConversion Dyadic::to_float() const {
  FloatConversion out;
  if (is_zero()) return out;

  const std::int64_t top = top_bit();
  if (top > 1023) {
    out.value = sign() > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    out.status = FloatConversion::Status::Overflow;
    return out;
  }
  // Exponent of the last retained bit; -1074 is the subnormal floor.
  const std::int64_t ulp = std::max<std::int64_t>(top - 52, -1074);
  const std::int64_t shift = ulp - exponent_;
  if (shift <= 0) {
    out.value = std::ldexp(mantissa_.get_d(), static_cast<int>(exponent_));
    return out;
  }
  if (shift > top - exponent_ + 2) {
    // Far below half an ulp of the smallest subnormal.
    out.value = sign() > 0 ? 0.0 : -0.0;
    out.status = FloatConversion::Status::Underflow;
    return out;
  }

  mpz_class mag = abs(mantissa_);
  mpz_class q;
  mpz_class r;
  mpz_fdiv_q_2exp(q.get_mpz_t(), mag.get_mpz_t(), static_cast<mp_bitcnt_t>(shift));
  mpz_fdiv_r_2exp(r.get_mpz_t(), mag.get_mpz_t(), static_cast<mp_bitcnt_t>(shift));
  const mpz_class half = shifted_left(mpz_class(1), shift - 1);
  const int c = cmp(r, half);
  if (c > 0 || (c == 0 && mpz_odd_p(q.get_mpz_t()))) q += 1;

  double v = std::ldexp(q.get_d(), static_cast<int>(ulp));
  if (sign() < 0) v = -v;
  out.value = v;
  if (std::isinf(v)) {
    out.status = FloatConversion::Status::Overflow;
  } else if (r == 0) {
    out.status = FloatConversion::Status::Exact;
  } else if (v == 0.0 || top < -1022) {
    out.status = FloatConversion::Status::Underflow;
  } else {
    out.status = FloatConversion::Status::Rounded;
  }
  return out;
}

double Dyadic::to_double() const {
  const auto conv = to_float();
  if (conv.status == FloatConversion::Status::Overflow) throw DyadicRangeError("dyadic value overflows double");
  return conv.value;
}

std::string Dyadic::to_string() const { return mantissa_.get_str(10) + "*2^" + std::to_string(exponent_); }

Dyadic operator+(const Dyadic& a, const Dyadic& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.exponent_ == b.exponent_) return Dyadic(a.mantissa_ + b.mantissa_, a.exponent_);
  const Dyadic& lo = a.exponent_ < b.exponent_ ? a : b;
  const Dyadic& hi = a.exponent_ < b.exponent_ ? b : a;
  return Dyadic(lo.mantissa_ + shifted_left(hi.mantissa_, hi.exponent_ - lo.exponent_), lo.exponent_);
}

Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }

Dyadic operator*(const Dyadic& a, const Dyadic& b) {
  if (a.is_zero() || b.is_zero()) return Dyadic();
  return Dyadic(a.mantissa_ * b.mantissa_, checked_exponent(static_cast<__int128>(a.exponent_) + b.exponent_));
}

Dyadic Dyadic::operator-() const {
  Dyadic out = *this;
  out.mantissa_ = -out.mantissa_;
  return out;
}

std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
  const int sa = a.sign();
  const int sb = b.sign();
  if (sa != sb) return sa <=> sb;
  if (sa == 0) return std::strong_ordering::equal;
  // Same nonzero sign: leading-bit positions decide unless they coincide.
  const std::int64_t ta = a.top_bit();
  const std::int64_t tb = b.top_bit();
  if (ta != tb) return sa > 0 ? ta <=> tb : tb <=> ta;
  const int s = (a - b).sign();
  return s <=> 0;
}

std::ostream& operator<<(std::ostream& os, const Dyadic& d) { return os << d.to_string(); }

}  // namespace cvxspec
