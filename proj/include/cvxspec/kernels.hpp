#pragma once

// Data-parallel inner loops shared by the estimators.
//
// Every kernel has a scalar reference and, on x86-64, an AVX2 variant. The
// variant is picked once at runtime from CPUID; CVXSPEC_SIMD=scalar|avx2
// overrides the choice. Scalar accumulations use the same 4-lane order as the
// vector code, so both paths return bit-identical results.

#include <cstddef>
#include <span>

namespace cvxspec::kernels {

enum class Isa { Scalar, Avx2 };

struct Range {
  double min;
  double max;
};

/// Sums over a uniformly spaced row: sum y_i and sum i*y_i.
struct GridSums {
  double sum;
  double weighted;
};

struct SecondDiffMin {
  double value;       // y[i-1] + y[i+1] - 2 y[i]
  std::size_t index;  // centre i; smallest index among ties
};

/// min and max of y_i - slope * x_i. Requires non-empty equal-length inputs.
Range deviation_range(std::span<const double> xs, std::span<const double> ys, double slope);
GridSums grid_sums(std::span<const double> ys);
/// max_i |y_i - (intercept + slope * i)|.
double max_abs_affine_residual(std::span<const double> ys, double intercept, double slope);
/// Requires ys.size() >= 3.
SecondDiffMin second_difference_min(std::span<const double> ys);
double dot(std::span<const double> a, std::span<const double> b);

Isa active_isa();
bool avx2_available();
/// Pins the dispatch target (tests and benchmarks). Throws if unavailable.
void force_isa(Isa isa);
const char* isa_name(Isa isa);

namespace scalar {
Range deviation_range(std::span<const double> xs, std::span<const double> ys, double slope);
GridSums grid_sums(std::span<const double> ys);
double max_abs_affine_residual(std::span<const double> ys, double intercept, double slope);
SecondDiffMin second_difference_min(std::span<const double> ys);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define CVXSPEC_HAVE_AVX2_KERNELS 1
namespace avx2 {
Range deviation_range(std::span<const double> xs, std::span<const double> ys, double slope);
GridSums grid_sums(std::span<const double> ys);
double max_abs_affine_residual(std::span<const double> ys, double intercept, double slope);
SecondDiffMin second_difference_min(std::span<const double> ys);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace avx2
#endif

}  // namespace cvxspec::kernels
