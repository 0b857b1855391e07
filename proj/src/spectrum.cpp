#include "cvxspec/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "cvxspec/kernels.hpp"
#include "cvxspec/parallel.hpp"

namespace cvxspec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct KindName {
  SpectrumKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {SpectrumKind::ConvexUpper, "convex-upper"},
    {SpectrumKind::ConvexTypical, "convex-typical"},
    {SpectrumKind::Monotone1D, "monotone-1d"},
    {SpectrumKind::Monotone1DUpper, "monotone-1d-upper"},
    {SpectrumKind::Misv, "misv"},
    {SpectrumKind::MeasureTypical, "measure-typical"},
};

}  // namespace

SpectrumKind parse_spectrum_kind(std::string_view name) {
  for (const auto& k : kKindNames)
    if (name == k.name) return k.kind;
  throw std::invalid_argument("unknown spectrum kind: " + std::string(name));
}

const char* spectrum_kind_name(SpectrumKind kind) {
  for (const auto& k : kKindNames)
    if (k.kind == kind) return k.name;
  return "?";
}

double theoretical_spectrum(SpectrumKind kind, int d, double h) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (!(h >= 0.0)) throw std::invalid_argument("h must be nonnegative");
  const double dd = d;
  switch (kind) {
    case SpectrumKind::ConvexUpper:
      if (h < 1.0) return dd - 1.0;
      if (h <= 2.0) return dd + h - 2.0;
      return dd;
    case SpectrumKind::ConvexTypical:
      if (h == 0.0) return dd - 1.0;
      if (h >= 1.0 && h <= 2.0) return dd + h - 2.0;
      return kNegInf;
    case SpectrumKind::Monotone1D:
      if (d != 1) throw std::invalid_argument("monotone spectra are one-dimensional");
      return h <= 1.0 ? h : kNegInf;
    case SpectrumKind::Monotone1DUpper:
      if (d != 1) throw std::invalid_argument("monotone spectra are one-dimensional");
      return std::min(h, 1.0);
    case SpectrumKind::Misv:
      return h <= 1.0 ? dd - 1.0 + h : kNegInf;
    case SpectrumKind::MeasureTypical:
      return h <= dd ? h : kNegInf;
  }
  throw std::invalid_argument("unknown spectrum kind");
}

double theoretical_spectrum(std::string_view kind, int d, double h) {
  return theoretical_spectrum(parse_spectrum_kind(kind), d, h);
}

SampledGrid sample_grid(const FunctionND& f, int dimension, int n) {
  if (dimension < 1 || dimension > kMaxDimension) throw std::invalid_argument("dimension must lie in [1, 3]");
  if (n < 1 || n > 30) throw std::invalid_argument("grid exponent out of range");
  SampledGrid g;
  g.dimension = dimension;
  g.n = n;
  const std::size_t side = g.side();
  std::size_t total = 1;
  for (int a = 0; a < dimension; ++a) {
    if (total > kMaxGridSamples / side) throw std::length_error("sample grid too large");
    total *= side;
  }
  g.values.resize(total);
  const double step = std::ldexp(1.0, -n);
  parallel_for(total, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(dimension);
    for (std::size_t i = begin; i < end; ++i) {
      std::size_t r = i;
      for (int a = 0; a < dimension; ++a) {
        x[a] = static_cast<double>(r % side) * step;
        r /= side;
      }
      g.values[i] = f(x);
    }
  });
  return g;
}

SampledGrid sample_grid(const ConvexFunctionExpr& f, int n) {
  return sample_grid([&f](std::span<const double> x) { return f.eval(x); }, f.dimension(), n);
}

namespace {

struct Window {
  std::size_t lo[3];
  std::size_t len[3];
};

// Sup residual of the least-squares affine fit over a tensor window. The
// design is orthogonal after centring each axis, so the fit is closed form;
// rows along x_1 go through the vector kernels.
double window_residual(const SampledGrid& g, const Window& w) {
  const int d = g.dimension;
  const std::size_t side = g.side();
  std::size_t stride[3] = {1, side, side * side};
  std::size_t rows = 1;
  for (int a = 1; a < d; ++a) rows *= w.len[a];
  const std::size_t n0 = w.len[0];

  auto row_span = [&](std::size_t r, std::size_t* idx) {
    std::size_t off = w.lo[0];
    for (int a = 1; a < d; ++a) {
      idx[a] = r % w.len[a];
      r /= w.len[a];
      off += (w.lo[a] + idx[a]) * stride[a];
    }
    return std::span<const double>(g.values.data() + off, n0);
  };

  double total = 0.0;
  double moment[3] = {0.0, 0.0, 0.0};
  std::size_t idx[3] = {0, 0, 0};
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = row_span(r, idx);
    const auto s = kernels::grid_sums(row);
    total += s.sum;
    moment[0] += s.weighted;
    for (int a = 1; a < d; ++a) moment[a] += static_cast<double>(idx[a]) * s.sum;
  }
  const double count = static_cast<double>(rows * n0);
  const double mean = total / count;
  double centre[3], beta[3];
  for (int a = 0; a < d; ++a) {
    const double len = static_cast<double>(w.len[a]);
    centre[a] = (len - 1.0) / 2.0;
    const double ss = count / len * len * (len * len - 1.0) / 12.0;
    beta[a] = ss > 0.0 ? (moment[a] - centre[a] * total) / ss : 0.0;
  }
  double worst = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = row_span(r, idx);
    double intercept = mean - beta[0] * centre[0];
    for (int a = 1; a < d; ++a) intercept += beta[a] * (static_cast<double>(idx[a]) - centre[a]);
    worst = std::max(worst, kernels::max_abs_affine_residual(row, intercept, beta[0]));
  }
  return worst;
}

}  // namespace

SpectrumCurve empirical_spectrum(const SampledGrid& grid, const SpectrumOptions& opts) {
  const int d = grid.dimension;
  if (d < 1 || d > kMaxDimension) throw std::invalid_argument("dimension must lie in [1, 3]");
  std::size_t expected = 1;
  for (int a = 0; a < d; ++a) expected *= grid.side();
  if (grid.values.size() != expected) throw std::invalid_argument("sample count does not match the grid");
  if (!(opts.bin_width > 0.0) || !(opts.h_max > 0.0)) throw std::invalid_argument("bin width and h_max must be positive");
  const double last_bin = std::round(opts.h_max / opts.bin_width);
  if (std::abs(last_bin * opts.bin_width - opts.h_max) > 1e-12 || last_bin > 4096)
    throw std::invalid_argument("h_max must be a multiple of the bin width");

  SpectrumCurve curve;
  curve.kind = SpectrumCurve::Kind::Empirical;
  curve.dimension = d;
  curve.bin_width = opts.bin_width;
  for (int m = std::max(opts.min_scale, 1); m <= std::min(grid.n - 2, opts.max_scale); ++m) curve.scales.push_back(m);
  if (curve.scales.size() < 3) throw std::invalid_argument("grid too coarse: fewer than three scales");
  if (static_cast<std::size_t>(d) * static_cast<std::size_t>(curve.scales.back()) > 40)
    throw std::invalid_argument("too many cells at the finest scale");

  const std::size_t nbins = static_cast<std::size_t>(last_bin) + 1;
  const std::size_t nscales = curve.scales.size();
  curve.bins.resize(nbins);
  for (std::size_t b = 0; b < nbins; ++b) {
    curve.bins[b].h = static_cast<double>(b) * opts.bin_width;
    curve.bins[b].counts.assign(nscales, 0);
    curve.bins[b].boundary_counts.assign(nscales, 0);
  }

  double lo = grid.values[0], hi = grid.values[0], big = 0.0;
  for (double v : grid.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    big = std::max(big, std::abs(v));
  }
  const double osc = hi - lo;
  const double floor = opts.floor_ulps * std::numeric_limits<double>::epsilon() * big;
  const std::size_t top = std::size_t{1} << grid.n;

  for (std::size_t si = 0; si < nscales; ++si) {
    const int m = curve.scales[si];
    const std::size_t per_axis = std::size_t{1} << m;
    const std::size_t s = std::size_t{1} << (grid.n - m);
    std::size_t cells = 1;
    for (int a = 0; a < d; ++a) cells *= per_axis;

    std::mutex merge;
    parallel_for(
        cells,
        [&](std::size_t begin, std::size_t end) {
          std::vector<std::uint64_t> interior(nbins, 0), boundary(nbins, 0);
          for (std::size_t c = begin; c < end; ++c) {
            Window w{};
            bool edge = false;
            std::size_t r = c;
            for (int a = 0; a < d; ++a) {
              const std::size_t k = r % per_axis;
              r /= per_axis;
              edge = edge || k == 0 || k + 1 == per_axis;
              const std::size_t first = k * s >= s / 2 ? k * s - s / 2 : 0;
              const std::size_t last = std::min(top, (k + 1) * s + s / 2);
              w.lo[a] = first;
              w.len[a] = last - first + 1;
            }
            const double e = window_residual(grid, w);
            std::size_t bin = nbins - 1;
            if (e > floor && osc > 0.0) {
              const double alpha = std::log2(e / osc) / -static_cast<double>(m);
              const double pos = std::floor(alpha / opts.bin_width + 0.5);
              bin = pos <= 0.0 ? 0 : std::min(nbins - 1, static_cast<std::size_t>(pos));
            }
            ++(edge ? boundary : interior)[bin];
          }
          std::lock_guard<std::mutex> lock(merge);
          for (std::size_t b = 0; b < nbins; ++b) {
            curve.bins[b].counts[si] += interior[b];
            curve.bins[b].boundary_counts[si] += boundary[b];
          }
        },
        64);
  }

  for (auto& bin : curve.bins) {
    double num = 0.0, den = 0.0;
    for (std::size_t si = 0; si < nscales; ++si) {
      if (bin.counts[si] == 0) continue;
      const double m = curve.scales[si];
      num += m * std::log2(static_cast<double>(bin.counts[si]));
      den += m * m;
    }
    bin.value = den > 0.0 ? num / den : kNegInf;
  }
  return curve;
}

SpectrumCurve theoretical_curve(SpectrumKind kind, int d, std::span<const double> hs) {
  SpectrumCurve curve;
  curve.kind = SpectrumCurve::Kind::Theoretical;
  curve.dimension = d;
  for (double h : hs) {
    SpectrumBin bin;
    bin.h = h;
    bin.value = theoretical_spectrum(kind, d, h);
    curve.bins.push_back(std::move(bin));
  }
  return curve;
}

BoundReport check_upper_bound(const SpectrumCurve& curve, int d, double tolerance) {
  BoundReport report;
  for (const auto& bin : curve.bins) {
    if (!std::isfinite(bin.value)) continue;
    const double bound = theoretical_spectrum(SpectrumKind::ConvexUpper, d, bin.h);
    if (bin.value > bound + tolerance) report.violations.push_back({bin.h, bin.value, bound});
  }
  report.pass = report.violations.empty();
  return report;
}

std::string format_spectrum_value(double v) {
  if (v == kNegInf) return "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string SpectrumCurve::to_csv() const {
  std::ostringstream out;
  out << "h,value,kind,bin_width,min_scale,max_scale\n";
  const char* k = kind == Kind::Empirical ? "empirical" : "theoretical";
  for (const auto& bin : bins) {
    out << format_spectrum_value(bin.h) << ',' << format_spectrum_value(bin.value) << ',' << k << ','
        << format_spectrum_value(bin_width) << ',';
    if (!scales.empty()) out << scales.front() << ',' << scales.back();
    else out << ',';
    out << '\n';
  }
  return out.str();
}

nlohmann::json SpectrumCurve::to_json() const {
  nlohmann::json j;
  j["format"] = "cvxspec-spectrum/1";
  j["kind"] = kind == Kind::Empirical ? "empirical" : "theoretical";
  j["dimension"] = dimension;
  j["bin_width"] = bin_width;
  j["scales"] = scales;
  j["bins"] = nlohmann::json::array();
  for (const auto& bin : bins) {
    nlohmann::json b;
    b["h"] = bin.h;
    if (std::isfinite(bin.value)) b["value"] = bin.value;
    else b["value"] = "-inf";
    if (kind == Kind::Empirical) {
      b["counts"] = bin.counts;
      b["boundary_counts"] = bin.boundary_counts;
    }
    j["bins"].push_back(std::move(b));
  }
  return j;
}

}  // namespace cvxspec
