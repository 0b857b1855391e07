#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvxspec/dyadic.hpp"
#include "cvxspec/expr.hpp"

namespace cvxspec {

/// A real function on [lo, hi], optionally with exact dyadic evaluation. When
/// `exact` is set, increments f(t') - f(t) are formed exactly before rounding,
/// which keeps residuals meaningful far below double resolution of f itself.
struct Function1D {
  std::function<double(double)> eval;
  double lo = 0.0;
  double hi = 1.0;
  std::function<Dyadic(const Dyadic&)> exact;
};

/// A function on [0,1]^d.
using FunctionND = std::function<double(std::span<const double>)>;

struct HolderOptions {
  double cap = 3.0;
  /// Radii 2^-e for e in scale_exponents.
  std::vector<int> scale_exponents{4, 5, 6, 7, 8, 9, 10, 11, 12};
  /// 1D: 2M+1 samples per window. nD: 2M+1 samples per axis.
  int half_samples = 64;
  int half_samples_nd = 8;
  /// Relative floor below which a residual counts as zero, in units of eps.
  double floor_ulps = 64.0;
};

std::vector<int> scale_range(int first, int last);

struct ExponentEstimate {
  std::vector<double> point;
  double value = 0.0;
  bool capped = false;
  /// Residuals vanished at every probed scale (locally polynomial).
  bool polynomial = false;
  /// Even the affine residual vanished at every scale (locally affine).
  bool affine = false;
  std::vector<double> radii;
  std::vector<double> residuals;  // affine-fit sup residual per radius
  double fit_residual = 0.0;      // rms deviation of the log-log fit
};

/// Pointwise exponent from the decay of min over affine P of
/// sup_{|t'-t| <= r} |f(t') - P(t' - t)|, over windows clipped to the domain.
ExponentEstimate holder_estimate_1d(const Function1D& f, double t, const HolderOptions& opts = {});

/// Same on a cube grid, with a least-squares affine fit per window.
ExponentEstimate holder_estimate_nd(const FunctionND& f, int dimension, std::span<const double> x,
                                    const HolderOptions& opts = {});

/// Minimax (Chebyshev) affine residual of the points (xs, ys).
double minimax_affine_residual(std::span<const double> xs, std::span<const double> ys);

enum class Side { Left, Right };

struct OneSidedDerivative {
  double value = 0.0;
  double bracket = 0.0;  // |q_last - q_previous|
  bool monotone = true;  // false: quotients not monotone, so f is not convex here
  std::vector<double> quotients;
};

/// Difference quotients at the given decreasing steps; value is the quotient at
/// the smallest step.
OneSidedDerivative convex_one_sided_derivative(const Function1D& f, double t, Side side,
                                               std::span<const double> steps);
std::vector<double> default_derivative_steps();

/// t -> f(x + t z) on the largest symmetric interval keeping x + t z in the
/// cube. Throws std::invalid_argument for a non-unit z or a degenerate interval.
Function1D directional_restriction(const ConvexFunctionExpr& f, std::span<const double> x, std::span<const double> z);
Function1D directional_restriction(const FunctionND& f, int dimension, std::span<const double> x,
                                   std::span<const double> z);

struct ConeSystem {
  int dimension = 2;
  std::vector<std::vector<double>> points;  // z_i on the unit sphere
  double cap_radius = 0.0;                  // eps_c
  double hull_radius = 0.0;                 // inradius of conv{z_i}
  double perturbed_hull_radius = 0.0;       // smallest inradius over sampled cap perturbations
  bool zero_margin = false;                 // hull radius is exactly 1/2
};

/// d = 2: N equally spaced points starting at e_1. d = 3: subdivided
/// icosahedron with at least N vertices (12, 42, 162, ...).
ConeSystem build_cone_system(int dimension, int count);

struct ConeProbeResult {
  bool inconclusive = false;
  std::size_t selected = 0;
  double full_estimate = 0.0;
  std::vector<double> cap_deviation;                // max |estimate - full| per cap
  std::vector<std::vector<double>> cap_estimates;   // per cap, per sampled direction
};

struct ConeProbeOptions {
  HolderOptions holder;
  double tolerance = 0.2;   // deviation accepted as consistent
  double tie_window = 0.05; // caps this close to the best count as tied
};

/// Picks the cap whose direction-restricted estimates best match the full
/// estimate at x. Samples the cap centre plus points on the cap boundary.
ConeProbeResult cone_probe(const ConvexFunctionExpr& f, std::span<const double> x, const ConeSystem& cs,
                           int samples_per_cap, const ConeProbeOptions& opts = {});

struct StabilityPartition {
  std::vector<double> nodes;  // 0 = x_0 < x_1 < ... < x_K = 1
  double min_gap = 0.0;       // over gaps 2..K
  double rho = 0.0;
};

/// Greedy partition on the 2^-grid_exp grid with derivative oscillation below
/// eps/4 between consecutive nodes and x_1 < eps; rho = (eps/4) * min gap.
/// Throws std::runtime_error when one grid step already oscillates by eps/4.
StabilityPartition derivative_stability_radius(const std::function<double(double)>& derivative, double eps,
                                               int grid_exp = 14);

struct StabilityReport {
  bool pass = true;
  double sup_distance = 0.0;  // max |g - f| on the certification grid
  std::optional<double> precondition_witness;
  std::optional<double> derivative_witness;
  double worst_derivative_gap = 0.0;
  std::size_t probes = 0;
};

struct StabilityOptions {
  int certify_grid_exp = 14;
  std::size_t probes = 100;
};

/// Certifies |g - f| < rho on a grid, then compares one-sided derivatives of g
/// with f' at probe points spread over [eps, 1 - eps].
StabilityReport check_derivative_stability(const Function1D& f, const std::function<double(double)>& derivative,
                                           const Function1D& g, double eps, double rho,
                                           const StabilityOptions& opts = {});

enum class ShiftStatus { Pass, Fail, Inconclusive };

struct ShiftReport {
  ShiftStatus status = ShiftStatus::Inconclusive;
  double h_f = 0.0;
  double h_derivative = 0.0;
  double deviation = 0.0;  // |h_f - h_f' - 1|
};

ShiftReport exponent_shift_check(const Function1D& f, const Function1D& derivative, double t, double tolerance = 0.15,
                                 const HolderOptions& opts = {});

const char* shift_status_name(ShiftStatus s);

}  // namespace cvxspec
