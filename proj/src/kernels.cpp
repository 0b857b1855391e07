#include "cvxspec/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string_view>

namespace cvxspec::kernels {

namespace {

Isa detect() {
  if (const char* env = std::getenv("CVXSPEC_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return Isa::Scalar;
    if (want == "avx2" && avx2_available()) return Isa::Avx2;
  }
  return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<int>& selected() {
  static std::atomic<int> isa{static_cast<int>(detect())};
  return isa;
}

bool use_avx2() {
#ifdef CVXSPEC_HAVE_AVX2_KERNELS
  return selected().load(std::memory_order_relaxed) == static_cast<int>(Isa::Avx2);
#else
  return false;
#endif
}

}  // namespace

bool avx2_available() {
#ifdef CVXSPEC_HAVE_AVX2_KERNELS
  static const bool ok = __builtin_cpu_supports("avx2");
  return ok;
#else
  return false;
#endif
}

Isa active_isa() { return static_cast<Isa>(selected().load()); }

void force_isa(Isa isa) {
  if (isa == Isa::Avx2 && !avx2_available()) throw std::runtime_error("AVX2 kernels unavailable on this CPU");
  selected().store(static_cast<int>(isa));
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

#ifdef CVXSPEC_HAVE_AVX2_KERNELS
#define CVXSPEC_DISPATCH(fn, ...) return use_avx2() ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#else
#define CVXSPEC_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

Range deviation_range(std::span<const double> xs, std::span<const double> ys, double slope) {
  CVXSPEC_DISPATCH(deviation_range, xs, ys, slope);
}

GridSums grid_sums(std::span<const double> ys) { CVXSPEC_DISPATCH(grid_sums, ys); }

double max_abs_affine_residual(std::span<const double> ys, double intercept, double slope) {
  CVXSPEC_DISPATCH(max_abs_affine_residual, ys, intercept, slope);
}

SecondDiffMin second_difference_min(std::span<const double> ys) { CVXSPEC_DISPATCH(second_difference_min, ys); }

double dot(std::span<const double> a, std::span<const double> b) { CVXSPEC_DISPATCH(dot, a, b); }

}  // namespace cvxspec::kernels
