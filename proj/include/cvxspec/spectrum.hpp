#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cvxspec/expr.hpp"
#include "cvxspec/regularity.hpp"

namespace cvxspec {

enum class SpectrumKind { ConvexUpper, ConvexTypical, Monotone1D, Monotone1DUpper, Misv, MeasureTypical };

/// "convex-upper", "convex-typical", "monotone-1d", "monotone-1d-upper",
/// "misv", "measure-typical". Throws std::invalid_argument otherwise.
SpectrumKind parse_spectrum_kind(std::string_view name);
const char* spectrum_kind_name(SpectrumKind kind);

/// Closed-form spectrum value; -infinity for an empty level set. The
/// monotone kinds require d = 1.
double theoretical_spectrum(SpectrumKind kind, int d, double h);
double theoretical_spectrum(std::string_view kind, int d, double h);

/// Values at (2^n + 1)^d grid points j * 2^-n, x_1 varying fastest.
struct SampledGrid {
  int dimension = 1;
  int n = 0;
  std::vector<double> values;

  std::size_t side() const { return (std::size_t{1} << n) + 1; }
};

/// Largest sample count sample_grid accepts.
constexpr std::size_t kMaxGridSamples = std::size_t{1} << 27;

SampledGrid sample_grid(const FunctionND& f, int dimension, int n);
SampledGrid sample_grid(const ConvexFunctionExpr& f, int n);

struct SpectrumOptions {
  double bin_width = 0.125;
  int min_scale = 6;
  int max_scale = 14;
  /// Bins are centred at 0, D, 2D, ... up to h_max; the last one is open
  /// above and also takes cells whose residual sits at the rounding floor.
  double h_max = 2.0;
  double floor_ulps = 64.0;
};

struct SpectrumBin {
  double h = 0.0;
  double value = 0.0;  // -infinity when no interior cell ever landed here
  std::vector<std::uint64_t> counts;           // interior cells per scale
  std::vector<std::uint64_t> boundary_counts;  // cells touching the cube boundary
};

struct SpectrumCurve {
  enum class Kind { Empirical, Theoretical };
  Kind kind = Kind::Empirical;
  int dimension = 1;
  double bin_width = 0.0;
  std::vector<int> scales;
  std::vector<SpectrumBin> bins;

  /// Columns h,value,kind,bin_width,min_scale,max_scale; -infinity as "-inf".
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Coarse-grained spectrum. At scale m every cell of side 2^-m gets the
/// exponent log2(E / osc) / -m, where E is the sup residual of the
/// least-squares affine fit over the centred window of side 2^(1-m) (clipped
/// to the cube) and osc the global sample oscillation. The value of a bin is
/// the least-squares slope through the origin of log2 N_m against m over the
/// scales where the bin is hit. Scales run over
/// [min_scale, min(n - 2, max_scale)], at least three of them.
SpectrumCurve empirical_spectrum(const SampledGrid& grid, const SpectrumOptions& opts = {});

/// The closed-form curve on the given h values.
SpectrumCurve theoretical_curve(SpectrumKind kind, int d, std::span<const double> hs);

struct BoundViolation {
  double h;
  double value;
  double bound;
};

struct BoundReport {
  bool pass = true;
  std::vector<BoundViolation> violations;
};

/// Compares every finite value with the convex upper bound plus tolerance.
BoundReport check_upper_bound(const SpectrumCurve& curve, int d, double tolerance);

/// "-inf" for -infinity, shortest round-trip text otherwise.
std::string format_spectrum_value(double v);

}  // namespace cvxspec
