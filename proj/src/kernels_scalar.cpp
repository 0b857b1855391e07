#include <algorithm>
#include <cmath>

#include "cvxspec/kernels.hpp"

namespace cvxspec::kernels::scalar {

// Lane reductions follow the AVX2 order: ((l0 + l1) + (l2 + l3)), then the tail.
namespace {
double reduce4(const double (&l)[4]) { return (l[0] + l[1]) + (l[2] + l[3]); }
}  // namespace

Range deviation_range(std::span<const double> xs, std::span<const double> ys, double slope) {
  double lo = ys[0] - slope * xs[0];
  double hi = lo;
  for (std::size_t i = 1; i < ys.size(); ++i) {
    const double v = ys[i] - slope * xs[i];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

GridSums grid_sums(std::span<const double> ys) {
  const std::size_t n4 = ys.size() / 4 * 4;
  double s[4] = {0, 0, 0, 0};
  double w[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) {
      s[k] = s[k] + ys[i + k];
      w[k] = w[k] + static_cast<double>(i + k) * ys[i + k];
    }
  }
  double sum = reduce4(s);
  double weighted = reduce4(w);
  for (std::size_t i = n4; i < ys.size(); ++i) {
    sum = sum + ys[i];
    weighted = weighted + static_cast<double>(i) * ys[i];
  }
  return {sum, weighted};
}

double max_abs_affine_residual(std::span<const double> ys, double intercept, double slope) {
  double m = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double r = ys[i] - (intercept + slope * static_cast<double>(i));
    m = std::max(m, std::fabs(r));
  }
  return m;
}

SecondDiffMin second_difference_min(std::span<const double> ys) {
  SecondDiffMin best{ys[0] + ys[2] - ys[1] * 2.0, 1};
  for (std::size_t i = 2; i + 1 < ys.size(); ++i) {
    const double v = (ys[i - 1] + ys[i + 1]) - ys[i] * 2.0;
    if (v < best.value) best = {v, i};
  }
  return best;
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n4 = a.size() / 4 * 4;
  double s[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) s[k] = s[k] + a[i + k] * b[i + k];
  }
  double out = reduce4(s);
  for (std::size_t i = n4; i < a.size(); ++i) out = out + a[i] * b[i];
  return out;
}

}  // namespace cvxspec::kernels::scalar
