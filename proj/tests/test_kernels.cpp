#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "cvxspec/kernels.hpp"

namespace k = cvxspec::kernels;

namespace {

std::vector<double> random_row(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng) * std::ldexp(1.0, static_cast<int>(seed % 7) - 3);
  return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 16, 31, 129, 1000};

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  for (std::size_t n : kSizes) {
    const auto xs = random_row(n, n), ys = random_row(n, n + 100);
    double lo = INFINITY, hi = -INFINITY, sum = 0, weighted = 0, maxres = 0, dot = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = ys[i] - 0.75 * xs[i];
      lo = std::min(lo, dv);
      hi = std::max(hi, dv);
      sum += ys[i];
      weighted += static_cast<double>(i) * ys[i];
      maxres = std::max(maxres, std::abs(ys[i] - (0.5 + 0.25 * static_cast<double>(i))));
      dot += xs[i] * ys[i];
    }
    const auto r = k::scalar::deviation_range(xs, ys, 0.75);
    CHECK(r.min == lo);
    CHECK(r.max == hi);
    const auto s = k::scalar::grid_sums(ys);
    CHECK(s.sum == doctest::Approx(sum).epsilon(1e-12));
    CHECK(s.weighted == doctest::Approx(weighted).epsilon(1e-12));
    CHECK(k::scalar::max_abs_affine_residual(ys, 0.5, 0.25) == maxres);
    CHECK(k::scalar::dot(xs, ys) == doctest::Approx(dot).epsilon(1e-12));
    if (n >= 3) {
      double best = INFINITY;
      std::size_t at = 0;
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const double v = (ys[i - 1] + ys[i + 1]) - ys[i] * 2.0;
        if (v < best) best = v, at = i;
      }
      const auto m = k::scalar::second_difference_min(ys);
      CHECK(m.value == best);
      CHECK(m.index == at);
    }
  }
}

TEST_CASE("second difference ties go to the smallest index") {
  const std::vector<double> ys(12, 1.0);
  const auto m = k::scalar::second_difference_min(ys);
  CHECK(m.value == 0.0);
  CHECK(m.index == 1);
}

#ifdef CVXSPEC_HAVE_AVX2_KERNELS
TEST_CASE("avx2 kernels are bit-identical to scalar") {
  if (!k::avx2_available()) return;
  for (std::size_t n : kSizes) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto xs = random_row(n, 31 * seed + n), ys = random_row(n, 57 * seed + n + 1);
      const auto a = k::scalar::deviation_range(xs, ys, -1.25), b = k::avx2::deviation_range(xs, ys, -1.25);
      CHECK(same_bits(a.min, b.min));
      CHECK(same_bits(a.max, b.max));
      const auto sa = k::scalar::grid_sums(ys), sb = k::avx2::grid_sums(ys);
      CHECK(same_bits(sa.sum, sb.sum));
      CHECK(same_bits(sa.weighted, sb.weighted));
      CHECK(same_bits(k::scalar::max_abs_affine_residual(ys, 0.1, -0.3),
                      k::avx2::max_abs_affine_residual(ys, 0.1, -0.3)));
      CHECK(same_bits(k::scalar::dot(xs, ys), k::avx2::dot(xs, ys)));
      if (n >= 3) {
        const auto ma = k::scalar::second_difference_min(ys), mb = k::avx2::second_difference_min(ys);
        CHECK(same_bits(ma.value, mb.value));
        CHECK(ma.index == mb.index);
      }
    }
  }
}
#endif

TEST_CASE("dispatch can be pinned") {
  const auto before = k::active_isa();
  k::force_isa(k::Isa::Scalar);
  CHECK(k::active_isa() == k::Isa::Scalar);
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(k::dot(a, b) == 32.0);
  if (k::avx2_available()) {
    k::force_isa(k::Isa::Avx2);
    CHECK(k::dot(a, b) == 32.0);
  } else {
    CHECK_THROWS(k::force_isa(k::Isa::Avx2));
  }
  k::force_isa(before);
  CHECK(std::string(k::isa_name(k::Isa::Avx2)) == "avx2");
}
