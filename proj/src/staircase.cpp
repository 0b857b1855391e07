#include "cvxspec/staircase.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cvxspec {

namespace {

void require_unit(const Dyadic& x) {
  if (x.sign() < 0 || x > Dyadic(1)) throw std::domain_error("staircase argument outside [0,1]: " + x.to_string());
}

void require_unit(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("staircase argument outside [0,1]: " + std::to_string(x));
}

// Splits x = j*c + r with 0 <= r < c (r = 0, j = 2^(l^2) at x = 1).
struct CellPosition {
  mpz_class j;
  Dyadic r;
};

CellPosition locate(const StaircaseParams& p, const Dyadic& x) {
  CellPosition out{x.floor_mul_pow2(p.cell_exponent()), {}};
  out.r = x - Dyadic(out.j, -p.cell_exponent());
  return out;
}

}  // namespace

StaircaseParams::StaircaseParams(std::int64_t level) : l_(level) {
  if (level < 2) throw std::invalid_argument("staircase level must be >= 2 (got " + std::to_string(level) + ")");
  if (level > kMaxLevel) throw std::invalid_argument("staircase level too large: " + std::to_string(level));
}

Dyadic gamma_eval(const StaircaseParams& p, const Dyadic& x1) {
  require_unit(x1);
  const auto [j, r] = locate(p, x1);
  const Dyadic plateau = Dyadic(j, -p.step_exponent());
  const Dyadic flat_end = p.cell_width() - p.ramp_width();
  if (r <= flat_end) return plateau;
  // Linear rise of one step across the ramp: slope 2^(l^4 - l^2 - l).
  return plateau + (r - flat_end).mul_pow2(p.ramp_exponent() - p.step_exponent());
}

Dyadic fbar_eval(const StaircaseParams& p, const Dyadic& x1) {
  require_unit(x1);
  const auto [j, r] = locate(p, x1);
  const std::int64_t s = p.step_exponent();
  const std::int64_t c = p.cell_exponent();
  const std::int64_t w = p.ramp_exponent();

  // Whole cells 0..j-1: cell i contributes i*s*c + s*w/2.
  const mpz_class pairs = j * (j - 1);  // 2 * sum_{i<j} i
  Dyadic total = Dyadic(pairs, -s - c - 1) + Dyadic(j, -s - w - 1);
  // Partial cell j: plateau j*s over r, plus the ramp's quadratic excess.
  total += Dyadic(j, -s) * r;
  const Dyadic flat_end = p.cell_width() - p.ramp_width();
  if (r > flat_end) {
    const Dyadic u = r - flat_end;
    total += (u * u).mul_pow2(w - s - 1);
  }
  return total;
}

double gamma_eval_float(const StaircaseParams& p, double x1) {
  require_unit(x1);
  const double c = std::ldexp(1.0, static_cast<int>(-std::min<std::int64_t>(p.cell_exponent(), 2000)));
  const double w = std::ldexp(1.0, static_cast<int>(-std::min<std::int64_t>(p.ramp_exponent(), 2000)));
  const double r = c > 0.0 ? std::fmod(x1, c) : 0.0;
  const double jc = x1 - r;
  const double top = std::ldexp(1.0, static_cast<int>(-p.level()));
  double v = top * jc;  // j * 2^(-l^2-l) = jc * 2^-l
  if (w > 0.0 && r > c - w) {
    v += top * (r - (c - w)) / w * c;
  }
  return v;
}

double fbar_eval_float(const StaircaseParams& p, double x1) {
  require_unit(x1);
  const double c = std::ldexp(1.0, static_cast<int>(-std::min<std::int64_t>(p.cell_exponent(), 2000)));
  const double w = std::ldexp(1.0, static_cast<int>(-std::min<std::int64_t>(p.ramp_exponent(), 2000)));
  const double r = c > 0.0 ? std::fmod(x1, c) : 0.0;
  const double jc = x1 - r;
  const double top = std::ldexp(1.0, static_cast<int>(-p.level()));
  // With j = jc / c and step s = c * 2^-l:
  //   s*c*j(j-1)/2 + j*s*w/2 + j*s*r = 2^-l * (jc(jc-c)/2 + jc*w/2 + jc*r)
  double v = top * (jc * (jc - c) * 0.5 + jc * w * 0.5 + jc * r);
  if (w > 0.0 && r > c - w) {
    const double u = r - (c - w);
    v += top * c * u * u / (2.0 * w);
  }
  return v;
}

double phi_eval(std::int64_t l, double x1) {
  if (l < 2) throw std::invalid_argument("phi level must be >= 2");
  require_unit(x1);
  const double ld = static_cast<double>(l);
  const double knee = std::pow(ld, -ld);
  if (x1 <= knee) return -std::pow(ld, ld - 1.0) * x1;
  return -1.0 / ld;
}

double phi_derivative(std::int64_t l, double x1) {
  if (l < 2) throw std::invalid_argument("phi level must be >= 2");
  require_unit(x1);
  const double ld = static_cast<double>(l);
  if (x1 < std::pow(ld, -ld)) return -std::pow(ld, ld - 1.0);
  return 0.0;
}

}  // namespace cvxspec
