#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "cvxspec/kernels.hpp"

namespace cvxspec::kernels::avx2 {

namespace {

double reduce_add(__m256d v) {
  alignas(32) double l[4];
  _mm256_store_pd(l, v);
  return (l[0] + l[1]) + (l[2] + l[3]);
}

double reduce_min(__m256d v) {
  alignas(32) double l[4];
  _mm256_store_pd(l, v);
  return std::min(std::min(l[0], l[1]), std::min(l[2], l[3]));
}

double reduce_max(__m256d v) {
  alignas(32) double l[4];
  _mm256_store_pd(l, v);
  return std::max(std::max(l[0], l[1]), std::max(l[2], l[3]));
}

}  // namespace

Range deviation_range(std::span<const double> xs, std::span<const double> ys, double slope) {
  const std::size_t n = ys.size();
  if (n < 4) return scalar::deviation_range(xs, ys, slope);
  const __m256d s = _mm256_set1_pd(slope);
  __m256d lo = _mm256_sub_pd(_mm256_loadu_pd(ys.data()), _mm256_mul_pd(s, _mm256_loadu_pd(xs.data())));
  __m256d hi = lo;
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_sub_pd(_mm256_loadu_pd(ys.data() + i), _mm256_mul_pd(s, _mm256_loadu_pd(xs.data() + i)));
    lo = _mm256_min_pd(lo, v);
    hi = _mm256_max_pd(hi, v);
  }
  Range r{reduce_min(lo), reduce_max(hi)};
  for (; i < n; ++i) {
    const double v = ys[i] - slope * xs[i];
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  }
  return r;
}

GridSums grid_sums(std::span<const double> ys) {
  const std::size_t n4 = ys.size() / 4 * 4;
  __m256d s = _mm256_setzero_pd();
  __m256d w = _mm256_setzero_pd();
  __m256d idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d step = _mm256_set1_pd(4.0);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d y = _mm256_loadu_pd(ys.data() + i);
    s = _mm256_add_pd(s, y);
    w = _mm256_add_pd(w, _mm256_mul_pd(idx, y));
    idx = _mm256_add_pd(idx, step);
  }
  double sum = reduce_add(s);
  double weighted = reduce_add(w);
  for (std::size_t i = n4; i < ys.size(); ++i) {
    sum = sum + ys[i];
    weighted = weighted + static_cast<double>(i) * ys[i];
  }
  return {sum, weighted};
}

double max_abs_affine_residual(std::span<const double> ys, double intercept, double slope) {
  const std::size_t n4 = ys.size() / 4 * 4;
  const __m256d a = _mm256_set1_pd(intercept);
  const __m256d b = _mm256_set1_pd(slope);
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d step = _mm256_set1_pd(4.0);
  __m256d idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  __m256d m = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(ys.data() + i), _mm256_add_pd(a, _mm256_mul_pd(b, idx)));
    m = _mm256_max_pd(m, _mm256_andnot_pd(sign, r));
    idx = _mm256_add_pd(idx, step);
  }
  double out = reduce_max(m);
  for (std::size_t i = n4; i < ys.size(); ++i) {
    out = std::max(out, std::fabs(ys[i] - (intercept + slope * static_cast<double>(i))));
  }
  return out;
}

SecondDiffMin second_difference_min(std::span<const double> ys) {
  const std::size_t n = ys.size();
  // Centres run over [1, n-2].
  if (n < 6) return scalar::second_difference_min(ys);
  const double* y = ys.data();
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d step = _mm256_set1_pd(4.0);
  __m256d idx = _mm256_set_pd(4.0, 3.0, 2.0, 1.0);
  __m256d best = _mm256_sub_pd(_mm256_add_pd(_mm256_loadu_pd(y), _mm256_loadu_pd(y + 2)),
                               _mm256_mul_pd(_mm256_loadu_pd(y + 1), two));
  __m256d best_idx = idx;
  std::size_t i = 5;
  for (; i + 4 < n; i += 4) {
    idx = _mm256_add_pd(idx, step);
    const __m256d v = _mm256_sub_pd(_mm256_add_pd(_mm256_loadu_pd(y + i - 1), _mm256_loadu_pd(y + i + 1)),
                                    _mm256_mul_pd(_mm256_loadu_pd(y + i), two));
    const __m256d lt = _mm256_cmp_pd(v, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, v, lt);
    best_idx = _mm256_blendv_pd(best_idx, idx, lt);
  }
  alignas(32) double bv[4];
  alignas(32) double bi[4];
  _mm256_store_pd(bv, best);
  _mm256_store_pd(bi, best_idx);
  SecondDiffMin out{bv[0], static_cast<std::size_t>(bi[0])};
  for (int k = 1; k < 4; ++k) {
    const auto ki = static_cast<std::size_t>(bi[k]);
    if (bv[k] < out.value || (bv[k] == out.value && ki < out.index)) out = {bv[k], ki};
  }
  for (; i + 1 < n; ++i) {
    const double v = (y[i - 1] + y[i + 1]) - y[i] * 2.0;
    if (v < out.value) out = {v, i};
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n4 = a.size() / 4 * 4;
  __m256d s = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    s = _mm256_add_pd(s, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i)));
  }
  double out = reduce_add(s);
  for (std::size_t i = n4; i < a.size(); ++i) out = out + a[i] * b[i];
  return out;
}

}  // namespace cvxspec::kernels::avx2
