#pragma once

#include <cstdint>

#include "cvxspec/dyadic.hpp"

namespace cvxspec {

/// The staircase of level l: 2^(l^2) plateaus of height step j*2^(-l^2-l),
/// each followed by a ramp of width 2^(-l^4). Level 1 is rejected because its
/// ramps would fill whole cells.
class StaircaseParams {
 public:
  static constexpr std::int64_t kMaxLevel = 32768;  // keeps l^4 inside the exponent range

  explicit StaircaseParams(std::int64_t level);

  std::int64_t level() const { return l_; }
  std::int64_t cell_exponent() const { return l_ * l_; }              // cell width 2^-(l^2)
  std::int64_t ramp_exponent() const { return l_ * l_ * l_ * l_; }    // ramp width 2^-(l^4)
  std::int64_t step_exponent() const { return l_ * l_ + l_; }         // step height 2^-(l^2+l)

  Dyadic cell_width() const { return Dyadic::pow2(-cell_exponent()); }
  Dyadic ramp_width() const { return Dyadic::pow2(-ramp_exponent()); }
  Dyadic step_height() const { return Dyadic::pow2(-step_exponent()); }
  Dyadic top_value() const { return Dyadic::pow2(-l_); }

 private:
  std::int64_t l_;
};

/// Staircase value at x1 in [0, 1]; exact.
Dyadic gamma_eval(const StaircaseParams& p, const Dyadic& x1);
/// Antiderivative of the staircase from 0 to x1; exact piecewise quadratic.
Dyadic fbar_eval(const StaircaseParams& p, const Dyadic& x1);

/// Floating-point counterparts. They agree with the exact values up to
/// rounding; ramps narrower than the double range are treated as jumps.
double gamma_eval_float(const StaircaseParams& p, double x1);
double fbar_eval_float(const StaircaseParams& p, double x1);

/// Spike -l^(l-1) x1 on [0, l^-l], constant -1/l afterwards. Requires l >= 2.
double phi_eval(std::int64_t l, double x1);
/// Right derivative of phi_eval in x1 (left derivative at x1 = 1).
double phi_derivative(std::int64_t l, double x1);

}  // namespace cvxspec
