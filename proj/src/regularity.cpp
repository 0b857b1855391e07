#include "cvxspec/regularity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "cvxspec/kernels.hpp"

namespace cvxspec {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct LogFit {
  double slope = 0.0;
  double rms = 0.0;
};

LogFit ols(const std::vector<double>& lx, const std::vector<double>& ly) {
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  LogFit fit;
  fit.slope = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (my + fit.slope * (lx[i] - mx));
    ss += e * e;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

// One probing window: sample offsets from the centre and increments
// y = f(centre + offset) - f(centre).
struct Window {
  double radius;
  std::vector<double> offsets;  // node-major, dim doubles per node
  std::vector<double> ys;
  double floor;
};

// Exponent of residual decay over the windows where the residual clears the
// floor. Returns nullopt when fewer than four scales carry signal.
std::optional<LogFit> decay_exponent(const std::vector<Window>& windows, const std::vector<double>& residuals) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (residuals[i] > windows[i].floor) {
      lx.push_back(std::log2(windows[i].radius));
      ly.push_back(std::log2(residuals[i]));
    }
  }
  if (lx.size() < 4) return std::nullopt;
  return ols(lx, ly);
}

// Sup residual of the least-squares fit by monomials of degree <= degree in
// the scaled offsets.
double ls_residual(const Window& w, int dim, int degree) {
  const std::size_t n = w.ys.size();
  std::vector<std::vector<int>> powers;  // exponent tuples
  for (int a = 0; a <= degree; ++a) {
    for (int b = 0; b <= (dim > 1 ? degree - a : 0); ++b) {
      for (int c = 0; c <= (dim > 2 ? degree - a - b : 0); ++c) {
        powers.push_back({a, b, c});
      }
    }
  }
  Eigen::MatrixXd A(n, powers.size());
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < powers.size(); ++p) {
      double v = 1.0;
      for (int a = 0; a < dim; ++a) v *= std::pow(w.offsets[i * dim + a] / w.radius, powers[p][a]);
      A(i, p) = v;
    }
    y(i) = w.ys[i];
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd res = y - A * coef;
  return res.cwiseAbs().maxCoeff();
}

double window_floor(double ulps, double center_value, const std::vector<double>& ys) {
  double m = 0;
  for (double y : ys) m = std::max(m, std::abs(y));
  return ulps * kEps * (std::abs(center_value) + m);
}

ExponentEstimate finish_estimate(ExponentEstimate est, const std::vector<Window>& windows, int dim,
                                 const HolderOptions& opts) {
  for (const auto& w : windows) est.radii.push_back(w.radius);
  const auto affine = decay_exponent(windows, est.residuals);
  if (!affine) {
    // Residuals vanish at the finest scales: locally polynomial.
    est.value = opts.cap;
    est.capped = true;
    est.polynomial = true;
    est.affine = std::all_of(windows.begin(), windows.end(),
                             [&, i = std::size_t{0}](const Window& w) mutable { return est.residuals[i++] <= w.floor; });
    return est;
  }
  est.value = affine->slope;
  est.fit_residual = affine->rms;
  if (est.value >= 1.75) {
    // The affine residual of any C^2 function decays like r^2; a quadratic
    // fit separates genuine h = 2 points from smoother ones.
    std::vector<double> quad;
    for (const auto& w : windows) quad.push_back(ls_residual(w, dim, 2));
    const auto q = decay_exponent(windows, quad);
    if (!q) {
      est.value = opts.cap;
      est.polynomial = true;
    } else if (q->slope >= affine->slope + 0.5) {
      est.value = std::min(q->slope, opts.cap);
      est.fit_residual = q->rms;
    }
  }
  est.value = std::clamp(est.value, 0.0, opts.cap);
  est.capped = est.value >= opts.cap;
  return est;
}

}  // namespace

std::vector<int> scale_range(int first, int last) {
  std::vector<int> out;
  for (int e = first; e <= last; ++e) out.push_back(e);
  return out;
}

double minimax_affine_residual(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n != ys.size() || n == 0) throw std::invalid_argument("minimax residual needs matching non-empty inputs");
  if (n <= 2) return 0.0;
  // The optimal strip has a side through a convex-hull edge, so the edge
  // slopes are the only candidates.
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (xs[a] - xs[o]) * (ys[b] - ys[o]) - (ys[a] - ys[o]) * (xs[b] - xs[o]);
  };
  std::vector<std::size_t> lower, upper;
  for (std::size_t i = 0; i < n; ++i) {
    while (lower.size() >= 2 && cross(lower[lower.size() - 2], lower.back(), i) <= 0) lower.pop_back();
    lower.push_back(i);
    while (upper.size() >= 2 && cross(upper[upper.size() - 2], upper.back(), i) >= 0) upper.pop_back();
    upper.push_back(i);
  }
  double best = std::numeric_limits<double>::infinity();
  auto try_edge = [&](std::size_t a, std::size_t b) {
    if (xs[b] == xs[a]) return;
    const double slope = (ys[b] - ys[a]) / (xs[b] - xs[a]);
    const auto r = kernels::deviation_range(xs, ys, slope);
    best = std::min(best, 0.5 * (r.max - r.min));
  };
  for (std::size_t i = 1; i < lower.size(); ++i) try_edge(lower[i - 1], lower[i]);
  for (std::size_t i = 1; i < upper.size(); ++i) try_edge(upper[i - 1], upper[i]);
  return best;
}

ExponentEstimate holder_estimate_1d(const Function1D& f, double t, const HolderOptions& opts) {
  if (opts.scale_exponents.size() < 4) throw std::invalid_argument("at least 4 scales are required");
  if (!(t >= f.lo && t <= f.hi)) throw std::domain_error("estimate point outside the function's domain");
  const int m2 = 2 * opts.half_samples;
  const bool exact = static_cast<bool>(f.exact) && (m2 & (m2 - 1)) == 0;
  int log_m2 = 0;
  while ((1 << log_m2) < m2) ++log_m2;

  ExponentEstimate est;
  est.point = {t};
  const double ft = f.eval(t);
  const Dyadic t_exact = Dyadic::from_double(t);
  const Dyadic ft_exact = exact ? f.exact(t_exact) : Dyadic();

  std::vector<Window> windows;
  for (int e : opts.scale_exponents) {
    const double r = std::ldexp(1.0, -e);
    Window w{r, {}, {}, 0.0};
    w.offsets.resize(m2 + 1);
    w.ys.resize(m2 + 1);
    if (exact) {
      const Dyadic rr = Dyadic::pow2(-e);
      Dyadic a = t_exact - rr, b = t_exact + rr;
      const Dyadic lo = Dyadic::from_double(f.lo), hi = Dyadic::from_double(f.hi);
      if (a < lo) a = lo;
      if (b > hi) b = hi;
      const Dyadic step = (b - a).mul_pow2(-log_m2);
      for (int i = 0; i <= m2; ++i) {
        const Dyadic x = a + step * Dyadic(i);
        w.offsets[i] = (x - t_exact).to_double();
        w.ys[i] = (f.exact(x) - ft_exact).to_float().value;
      }
      w.floor = window_floor(opts.floor_ulps, 0.0, w.ys);
    } else {
      const double a = std::max(f.lo, t - r), b = std::min(f.hi, t + r);
      for (int i = 0; i <= m2; ++i) {
        const double x = i == m2 ? b : a + (b - a) * i / m2;
        w.offsets[i] = x - t;
        w.ys[i] = f.eval(x) - ft;
      }
      w.floor = window_floor(opts.floor_ulps, ft, w.ys);
    }
    est.residuals.push_back(minimax_affine_residual(w.offsets, w.ys));
    windows.push_back(std::move(w));
  }
  return finish_estimate(std::move(est), windows, 1, opts);
}

ExponentEstimate holder_estimate_nd(const FunctionND& f, int dim, std::span<const double> x,
                                    const HolderOptions& opts) {
  if (dim < 1 || dim > kMaxDimension || static_cast<int>(x.size()) != dim) {
    throw std::invalid_argument("point has wrong dimension");
  }
  if (opts.scale_exponents.size() < 4) throw std::invalid_argument("at least 4 scales are required");
  const int k2 = 2 * opts.half_samples_nd;
  const double fx = f(x);

  ExponentEstimate est;
  est.point.assign(x.begin(), x.end());
  std::vector<Window> windows;
  std::vector<double> p(dim);
  for (int e : opts.scale_exponents) {
    const double r = std::ldexp(1.0, -e);
    double lo[kMaxDimension], hi[kMaxDimension];
    for (int a = 0; a < dim; ++a) {
      lo[a] = std::max(0.0, x[a] - r);
      hi[a] = std::min(1.0, x[a] + r);
    }
    Window w{r, {}, {}, 0.0};
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(k2 + 1);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rest = idx;
      for (int a = 0; a < dim; ++a) {
        const int i = static_cast<int>(rest % (k2 + 1));
        rest /= (k2 + 1);
        p[a] = i == k2 ? hi[a] : lo[a] + (hi[a] - lo[a]) * i / k2;
        w.offsets.push_back(p[a] - x[a]);
      }
      w.ys.push_back(f(p) - fx);
    }
    w.floor = window_floor(opts.floor_ulps, fx, w.ys);
    est.residuals.push_back(ls_residual(w, dim, 1));
    windows.push_back(std::move(w));
  }
  return finish_estimate(std::move(est), windows, dim, opts);
}

// ---- one-sided derivatives ----

std::vector<double> default_derivative_steps() {
  std::vector<double> s;
  for (int e = 12; e <= 26; ++e) s.push_back(std::ldexp(1.0, -e));
  return s;
}

OneSidedDerivative convex_one_sided_derivative(const Function1D& f, double t, Side side,
                                               std::span<const double> steps) {
  if (steps.size() < 2) throw std::invalid_argument("need at least two steps");
  const double sign = side == Side::Right ? 1.0 : -1.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] > 0) || (i > 0 && steps[i] >= steps[i - 1])) {
      throw std::invalid_argument("steps must be positive and decreasing");
    }
    const double probe = t + sign * steps[i];
    if (probe < f.lo || probe > f.hi) throw std::domain_error("derivative step leaves the domain");
  }

  OneSidedDerivative out;
  if (f.exact) {
    const Dyadic te = Dyadic::from_double(t);
    const Dyadic ft = f.exact(te);
    std::vector<Dyadic> deltas;  // f(t + sign*s) - f(t), oriented so quotient = delta / s
    for (double s : steps) {
      const Dyadic se = Dyadic::from_double(s);
      Dyadic d = f.exact(side == Side::Right ? te + se : te - se) - ft;
      if (side == Side::Left) d = -d;
      deltas.push_back(d);
      out.quotients.push_back(d.to_double() / s);
    }
    for (std::size_t i = 1; i < steps.size(); ++i) {
      // q_i vs q_{i-1} compared as delta_i * s_{i-1} vs delta_{i-1} * s_i
      const Dyadic lhs = deltas[i] * Dyadic::from_double(steps[i - 1]);
      const Dyadic rhs = deltas[i - 1] * Dyadic::from_double(steps[i]);
      if (side == Side::Right ? lhs > rhs : lhs < rhs) out.monotone = false;
    }
  } else {
    const double ft = f.eval(t);
    std::vector<double> noise;
    for (double s : steps) {
      const double fs = f.eval(t + sign * s);
      out.quotients.push_back((fs - ft) / (sign * s));
      noise.push_back(8 * kEps * (std::abs(ft) + std::abs(fs)) / s);
    }
    for (std::size_t i = 1; i < steps.size(); ++i) {
      const double slack = noise[i] + noise[i - 1];
      const double d = out.quotients[i] - out.quotients[i - 1];
      if (side == Side::Right ? d > slack : d < -slack) out.monotone = false;
    }
  }
  out.value = out.quotients.back();
  out.bracket = std::abs(out.quotients.back() - out.quotients[out.quotients.size() - 2]);
  return out;
}

// ---- restrictions ----

namespace {

double symmetric_extent(int dim, std::span<const double> x, std::span<const double> z) {
  if (static_cast<int>(x.size()) != dim || static_cast<int>(z.size()) != dim) {
    throw std::invalid_argument("point or direction has wrong dimension");
  }
  double norm2 = 0;
  for (double v : z) norm2 += v * v;
  if (std::abs(norm2 - 1.0) > 1e-12) throw std::invalid_argument("direction must have unit norm");
  double extent = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim; ++a) {
    if (z[a] != 0.0) extent = std::min(extent, std::min(x[a], 1.0 - x[a]) / std::abs(z[a]));
  }
  if (!(extent > 0.0)) throw std::invalid_argument("restriction interval is degenerate (point on the boundary)");
  return extent;
}

}  // namespace

Function1D directional_restriction(const FunctionND& f, int dim, std::span<const double> x,
                                   std::span<const double> z) {
  const double extent = symmetric_extent(dim, x, z);
  std::vector<double> xv(x.begin(), x.end()), zv(z.begin(), z.end());
  Function1D out;
  out.lo = -extent;
  out.hi = extent;
  out.eval = [f, xv, zv](double t) {
    double p[kMaxDimension];
    for (std::size_t a = 0; a < xv.size(); ++a) p[a] = std::clamp(xv[a] + t * zv[a], 0.0, 1.0);
    return f(std::span<const double>(p, xv.size()));
  };
  return out;
}

Function1D directional_restriction(const ConvexFunctionExpr& f, std::span<const double> x,
                                   std::span<const double> z) {
  auto shared = std::make_shared<const ConvexFunctionExpr>(f);
  const int dim = f.dimension();
  Function1D out = directional_restriction([shared](std::span<const double> p) { return shared->eval(p); }, dim, x, z);
  if (f.exact_capable()) {
    std::vector<Dyadic> xe, ze;
    for (double v : x) xe.push_back(Dyadic::from_double(v));
    for (double v : z) ze.push_back(Dyadic::from_double(v));
    out.exact = [shared, xe, ze](const Dyadic& t) {
      std::vector<Dyadic> p;
      for (std::size_t a = 0; a < xe.size(); ++a) {
        Dyadic v = xe[a] + t * ze[a];
        if (v.sign() < 0) v = Dyadic(0);
        if (v > Dyadic(1)) v = Dyadic(1);
        p.push_back(std::move(v));
      }
      return shared->eval_exact(p);
    };
  }
  return out;
}

// ---- cone systems ----

namespace {

using Vec3 = std::array<double, 3>;

Vec3 normalized(Vec3 v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

Mesh icosahedron() {
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh m;
  const double raw[12][3] = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                             {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
  for (const auto& v : raw) m.vertices.push_back(normalized({v[0], v[1], v[2]}));
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  return m;
}

Mesh subdivide(const Mesh& in) {
  Mesh out;
  out.vertices = in.vertices;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Vec3& p = out.vertices[a];
    const Vec3& q = out.vertices[b];
    out.vertices.push_back(normalized({p[0] + q[0], p[1] + q[1], p[2] + q[2]}));
    const int id = static_cast<int>(out.vertices.size()) - 1;
    midpoint.emplace(key, id);
    return id;
  };
  for (const auto& f : in.faces) {
    const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
    out.faces.push_back({f[0], ab, ca});
    out.faces.push_back({f[1], bc, ab});
    out.faces.push_back({f[2], ca, bc});
    out.faces.push_back({ab, bc, ca});
  }
  return out;
}

double plane_distance(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const Vec3 v{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const Vec3 n{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  return std::abs(n[0] * a[0] + n[1] * a[1] + n[2] * a[2]) / len;
}

double polygon_inradius(const std::vector<std::array<double, 2>>& pts) {
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const auto& q = pts[(i + 1) % pts.size()];
    const double ex = q[0] - p[0], ey = q[1] - p[1];
    r = std::min(r, std::abs(p[0] * ey - p[1] * ex) / std::hypot(ex, ey));
  }
  return r;
}

// Deterministic perturbations of each point by up to eps_c inside its cap.
std::vector<double> cap_shift(std::size_t i, std::size_t trial, int dim) {
  std::vector<double> dir(dim);
  double n = 0;
  for (int a = 0; a < dim; ++a) {
    const double phase = static_cast<double>((i * 7919 + trial * 104729 + static_cast<std::size_t>(a) * 31) % 1000);
    dir[a] = std::sin(phase * 12.9898 + 78.233);
    n += dir[a] * dir[a];
  }
  for (double& v : dir) v /= std::sqrt(n);
  return dir;
}

}  // namespace

ConeSystem build_cone_system(int dim, int count) {
  ConeSystem cs;
  cs.dimension = dim;
  constexpr int kTrials = 64;
  if (dim == 2) {
    if (count < 3) throw std::invalid_argument("cone system hull has empty interior or misses B(0,1/2): N = " +
                                               std::to_string(count) + " points give hull radius 0");
    for (int i = 0; i < count; ++i) {
      const double a = 2.0 * std::numbers::pi * i / count;
      cs.points.push_back({std::cos(a), std::sin(a)});
    }
    cs.hull_radius = std::cos(std::numbers::pi / count);
    cs.cap_radius = 2.0 * std::sin(std::numbers::pi / count) / 1000.0;
    cs.perturbed_hull_radius = cs.hull_radius;
    for (int trial = 0; trial < kTrials; ++trial) {
      std::vector<std::array<double, 2>> moved;
      for (int i = 0; i < count; ++i) {
        const auto s = cap_shift(i, trial, 2);
        moved.push_back({cs.points[i][0] + cs.cap_radius * s[0], cs.points[i][1] + cs.cap_radius * s[1]});
      }
      cs.perturbed_hull_radius = std::min(cs.perturbed_hull_radius, polygon_inradius(moved));
    }
  } else if (dim == 3) {
    Mesh mesh = icosahedron();
    while (static_cast<int>(mesh.vertices.size()) < count) mesh = subdivide(mesh);
    for (const auto& v : mesh.vertices) cs.points.push_back({v[0], v[1], v[2]});
    double min_dist = std::numeric_limits<double>::infinity();
    for (const auto& f : mesh.faces) {
      for (int e = 0; e < 3; ++e) {
        const auto& p = mesh.vertices[f[e]];
        const auto& q = mesh.vertices[f[(e + 1) % 3]];
        min_dist = std::min(min_dist, std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                                                (p[2] - q[2]) * (p[2] - q[2])));
      }
    }
    cs.cap_radius = min_dist / 1000.0;
    cs.hull_radius = std::numeric_limits<double>::infinity();
    for (const auto& f : mesh.faces) {
      cs.hull_radius = std::min(cs.hull_radius, plane_distance(mesh.vertices[f[0]], mesh.vertices[f[1]],
                                                               mesh.vertices[f[2]]));
    }
    cs.perturbed_hull_radius = cs.hull_radius;
    for (int trial = 0; trial < kTrials; ++trial) {
      std::vector<Vec3> moved;
      for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto s = cap_shift(i, trial, 3);
        const auto& v = mesh.vertices[i];
        moved.push_back({v[0] + cs.cap_radius * s[0], v[1] + cs.cap_radius * s[1], v[2] + cs.cap_radius * s[2]});
      }
      for (const auto& f : mesh.faces) {
        cs.perturbed_hull_radius =
            std::min(cs.perturbed_hull_radius, plane_distance(moved[f[0]], moved[f[1]], moved[f[2]]));
      }
    }
  } else {
    throw std::invalid_argument("cone systems are built for d = 2 or 3");
  }
  constexpr double kSlack = 1e-12;
  if (cs.hull_radius < 0.5 - kSlack) {
    throw std::invalid_argument("cone system hull misses B(0,1/2): hull radius " + std::to_string(cs.hull_radius));
  }
  if (cs.perturbed_hull_radius < 0.25) {
    throw std::invalid_argument("perturbed cone hull misses B(0,1/4): radius " +
                                std::to_string(cs.perturbed_hull_radius));
  }
  cs.zero_margin = std::abs(cs.hull_radius - 0.5) <= kSlack;
  return cs;
}

namespace {

// Directions sampled in cap i: its centre, then points on the cap boundary.
std::vector<std::vector<double>> cap_directions(const ConeSystem& cs, std::size_t i, int samples) {
  std::vector<std::vector<double>> out{cs.points[i]};
  const double angle = 2.0 * std::asin(cs.cap_radius / 2.0);  // geodesic radius of the cap
  for (int s = 1; s < samples; ++s) {
    if (cs.dimension == 2) {
      const double base = std::atan2(cs.points[i][1], cs.points[i][0]);
      const double off = (s % 2 == 1 ? 1.0 : -1.0) * angle * (static_cast<double>((s + 1) / 2) / ((samples) / 2));
      out.push_back({std::cos(base + off), std::sin(base + off)});
    } else {
      const Vec3 z{cs.points[i][0], cs.points[i][1], cs.points[i][2]};
      const Vec3 helper = std::abs(z[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
      Vec3 u{z[1] * helper[2] - z[2] * helper[1], z[2] * helper[0] - z[0] * helper[2],
             z[0] * helper[1] - z[1] * helper[0]};
      u = normalized(u);
      const Vec3 v{z[1] * u[2] - z[2] * u[1], z[2] * u[0] - z[0] * u[2], z[0] * u[1] - z[1] * u[0]};
      const double phi = 2.0 * std::numbers::pi * (s - 1) / (samples - 1);
      const double c = std::cos(angle), sn = std::sin(angle);
      Vec3 w;
      for (int a = 0; a < 3; ++a) w[a] = c * z[a] + sn * (std::cos(phi) * u[a] + std::sin(phi) * v[a]);
      w = normalized(w);
      out.push_back({w[0], w[1], w[2]});
    }
  }
  return out;
}

}  // namespace

ConeProbeResult cone_probe(const ConvexFunctionExpr& f, std::span<const double> x, const ConeSystem& cs,
                           int samples_per_cap, const ConeProbeOptions& opts) {
  if (f.dimension() != cs.dimension) throw std::invalid_argument("cone system dimension does not match");
  if (samples_per_cap < 1) throw std::invalid_argument("need at least one sample per cap");
  for (double v : x) {
    if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("cone probe needs an interior point");
  }
  ConeProbeResult out;
  const auto full =
      holder_estimate_nd([&](std::span<const double> p) { return f.eval(p); }, f.dimension(), x, opts.holder);
  out.full_estimate = full.value;

  for (std::size_t i = 0; i < cs.points.size(); ++i) {
    std::vector<double> estimates;
    double worst = 0;
    for (const auto& z : cap_directions(cs, i, samples_per_cap)) {
      const auto g = directional_restriction(f, x, z);
      const auto e = holder_estimate_1d(g, 0.0, opts.holder);
      estimates.push_back(e.value);
      worst = std::max(worst, std::abs(e.value - full.value));
    }
    out.cap_estimates.push_back(std::move(estimates));
    out.cap_deviation.push_back(worst);
  }
  const double best = *std::min_element(out.cap_deviation.begin(), out.cap_deviation.end());
  for (std::size_t i = 0; i < out.cap_deviation.size(); ++i) {
    if (out.cap_deviation[i] <= best + opts.tie_window) {
      out.selected = i;
      break;
    }
  }
  out.inconclusive = full.affine || best > opts.tolerance;
  return out;
}

// ---- derivative stability ----

StabilityPartition derivative_stability_radius(const std::function<double(double)>& derivative, double eps,
                                               int grid_exp) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("eps must lie in (0, 1/2)");
  if (grid_exp < 2 || grid_exp > 24) throw std::invalid_argument("grid exponent must lie in [2, 24]");
  const long n = 1L << grid_exp;
  const double h = std::ldexp(1.0, -grid_exp);
  std::vector<double> v(n + 1);
  for (long i = 0; i <= n; ++i) v[i] = derivative(i * h);
  const double bound = eps / 4.0;

  // Walk left from 1, extending each cell as far as the oscillation allows.
  std::vector<long> nodes{n};
  long b = n;
  while (b > 0) {
    double lo = v[b], hi = v[b];
    long a = b;
    while (a > 0) {
      const double nlo = std::min(lo, v[a - 1]), nhi = std::max(hi, v[a - 1]);
      if (nhi - nlo >= bound) break;
      lo = nlo;
      hi = nhi;
      --a;
    }
    if (a == b) {
      throw std::runtime_error("derivative oscillates by eps/4 within one grid step near x = " +
                               std::to_string(b * h) + "; use a finer grid");
    }
    nodes.push_back(a);
    b = a;
  }
  std::reverse(nodes.begin(), nodes.end());
  // x_1 must lie below eps; the first cell already has small oscillation, so
  // any node inside it may serve.
  if (nodes.size() < 2 || nodes[1] * h >= eps) nodes.insert(nodes.begin() + 1, 1);

  StabilityPartition out;
  for (long i : nodes) out.nodes.push_back(i * h);
  out.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t l = 2; l < out.nodes.size(); ++l) out.min_gap = std::min(out.min_gap, out.nodes[l] - out.nodes[l - 1]);
  out.rho = bound * out.min_gap;
  return out;
}

StabilityReport check_derivative_stability(const Function1D& f, const std::function<double(double)>& derivative,
                                           const Function1D& g, double eps, double rho,
                                           const StabilityOptions& opts) {
  StabilityReport report;
  const long n = 1L << opts.certify_grid_exp;
  double worst_at = 0;
  for (long i = 0; i <= n; ++i) {
    const double x = std::ldexp(static_cast<double>(i), -opts.certify_grid_exp);
    const double d = std::abs(g.eval(x) - f.eval(x));
    if (d > report.sup_distance) {
      report.sup_distance = d;
      worst_at = x;
    }
  }
  if (report.sup_distance >= rho) report.precondition_witness = worst_at;

  const auto steps = default_derivative_steps();
  report.probes = opts.probes;
  for (std::size_t k = 0; k < opts.probes; ++k) {
    const double x = opts.probes == 1 ? 0.5 : eps + (1.0 - 2.0 * eps) * k / (opts.probes - 1);
    const double target = derivative(x);
    for (Side side : {Side::Left, Side::Right}) {
      const auto q = convex_one_sided_derivative(g, x, side, steps);
      const double gap = std::abs(q.value - target);
      report.worst_derivative_gap = std::max(report.worst_derivative_gap, gap);
      if (gap >= eps && !report.derivative_witness) report.derivative_witness = x;
    }
  }
  report.pass = !report.precondition_witness && !report.derivative_witness;
  return report;
}

// ---- exponent shift ----

const char* shift_status_name(ShiftStatus s) {
  switch (s) {
    case ShiftStatus::Pass:
      return "pass";
    case ShiftStatus::Fail:
      return "fail";
    case ShiftStatus::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

ShiftReport exponent_shift_check(const Function1D& f, const Function1D& derivative, double t, double tolerance,
                                 const HolderOptions& opts) {
  ShiftReport out;
  const auto hf = holder_estimate_1d(f, t, opts);
  const auto hd = holder_estimate_1d(derivative, t, opts);
  out.h_f = hf.value;
  out.h_derivative = hd.value;
  out.deviation = std::abs(hf.value - hd.value - 1.0);
  if (hf.capped || hd.capped || hf.value < 1.0 - tolerance || hf.value >= 2.0) {
    out.status = ShiftStatus::Inconclusive;
  } else {
    out.status = out.deviation <= tolerance ? ShiftStatus::Pass : ShiftStatus::Fail;
  }
  return out;
}

}  // namespace cvxspec
