#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cvxspec/regularity.hpp"
#include "cvxspec/staircase.hpp"

using namespace cvxspec;

namespace {

Function1D cusp(double c, double h) {
  return {[c, h](double t) { return std::pow(std::abs(t - c), h); }, 0.0, 1.0, {}};
}

Function1D cusp_derivative(double c, double h) {
  return {[c, h](double t) {
            const double s = t < c ? -1.0 : (t > c ? 1.0 : 0.0);
            return h * s * std::pow(std::abs(t - c), h - 1.0);
          },
          0.0, 1.0, {}};
}

Function1D fbar1d(long l) {
  StaircaseParams p(l);
  return {[p](double t) { return fbar_eval_float(p, t); }, 0.0, 1.0,
          [p](const Dyadic& t) { return fbar_eval(p, t); }};
}

Function1D poly(std::function<double(double)> fn) { return {std::move(fn), 0.0, 1.0, {}}; }

// Brute-force minimax affine residual: dense slope scan refined around the
// best candidate.
double brute_minimax(const std::vector<double>& xs, const std::vector<double>& ys) {
  auto width = [&](double s) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < xs.size(); ++i) lo = std::min(lo, ys[i] - s * xs[i]), hi = std::max(hi, ys[i] - s * xs[i]);
    return 0.5 * (hi - lo);
  };
  double a = -10, b = 10;
  for (int it = 0; it < 200; ++it) {  // width is convex in s: ternary search
    const double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
    if (width(m1) < width(m2)) b = m2; else a = m1;
  }
  return width(0.5 * (a + b));
}

}  // namespace

TEST_CASE("minimax affine residual matches a slope search") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 40; ++i) {
    const double x = i / 40.0;
    xs.push_back(x);
    ys.push_back(std::sin(7 * x) + 0.3 * x * x);
  }
  CHECK(minimax_affine_residual(xs, ys) == doctest::Approx(brute_minimax(xs, ys)).epsilon(1e-9));
  // symmetric cusp: best line is horizontal, residual half the height
  xs.clear();
  ys.clear();
  for (int i = -8; i <= 8; ++i) xs.push_back(i / 8.0), ys.push_back(std::abs(i / 8.0));
  CHECK(minimax_affine_residual(xs, ys) == doctest::Approx(0.5));
}

TEST_CASE("cusp exponents") {
  const auto e = holder_estimate_1d(cusp(0.5, 1.5), 0.5);
  CHECK(std::abs(e.value - 1.5) < 0.1);
  CHECK(e.radii.size() >= 4);
  CHECK_FALSE(e.capped);
}

TEST_CASE("smooth point hits the cap") {
  const auto e = holder_estimate_1d(poly([](double t) { return t * t; }), 0.5);
  CHECK(e.capped);
  CHECK(e.polynomial);
  CHECK(e.value == 3.0);
  const auto lin = holder_estimate_1d(poly([](double t) { return 3 * t + 1; }), 0.5);
  CHECK(lin.capped);
  CHECK(lin.affine);
}

TEST_CASE("fbar_2 breakpoint has exponent 2") {
  StaircaseParams p(2);
  // end of the j = 7 plateau
  const double t = 8.0 / 16 - std::ldexp(1.0, -16);
  HolderOptions opts;
  opts.scale_exponents = scale_range(17, 24);
  const auto e = holder_estimate_1d(fbar1d(2), t, opts);
  CHECK(std::abs(e.value - 2.0) < 0.2);

  // oracle: residual table by brute-force slope search on the same samples
  for (int k : {17, 20, 24}) {
    const Dyadic te = Dyadic::from_double(t), r = Dyadic::pow2(-k);
    std::vector<double> xs, ys;
    for (int i = 0; i <= 128; ++i) {
      const Dyadic x = te - r + (r.mul_pow2(1) * Dyadic(i)).mul_pow2(-7);
      xs.push_back((x - te).to_double());
      ys.push_back((fbar_eval(p, x) - fbar_eval(p, te)).to_double());
    }
    const double expected = brute_minimax(xs, ys);
    const std::size_t idx = static_cast<std::size_t>(k - 17);
    CHECK(e.residuals[idx] == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("estimates increase with the cusp power") {
  std::vector<double> values;
  for (int i = 1; i <= 9; ++i) values.push_back(holder_estimate_1d(cusp(0.5, 1.0 + i / 10.0), 0.5).value);
  for (std::size_t i = 1; i < values.size(); ++i) CHECK(values[i] > values[i - 1]);
}

TEST_CASE("boundary windows are clipped") {
  const auto e = holder_estimate_1d(cusp(0.0, 1.3), 0.0);
  CHECK(std::abs(e.value - 1.3) < 0.1);
  CHECK_THROWS(holder_estimate_1d(cusp(0.0, 1.3), 1.5));
}

TEST_CASE("nD estimator") {
  const FunctionND cone = [](std::span<const double> x) { return std::pow(std::hypot(x[0] - 0.5, x[1] - 0.5), 1.4); };
  const std::vector<double> c{0.5, 0.5};
  CHECK(std::abs(holder_estimate_nd(cone, 2, c).value - 1.4) < 0.15);
  const FunctionND bowl = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
  CHECK(holder_estimate_nd(bowl, 2, c).capped);
}

TEST_CASE("one-sided derivatives") {
  const auto abs_c = Function1D{[](double t) { return std::abs(t - 0.5); }, 0, 1, {}};
  const auto steps = default_derivative_steps();
  auto r = convex_one_sided_derivative(abs_c, 0.5, Side::Right, steps);
  CHECK(r.value == 1.0);
  CHECK(r.bracket == 0.0);
  CHECK(r.monotone);
  CHECK(convex_one_sided_derivative(abs_c, 0.5, Side::Left, steps).value == -1.0);

  const auto sq = poly([](double t) { return t * t; });
  for (Side s : {Side::Left, Side::Right}) {
    const auto q = convex_one_sided_derivative(sq, 0.25, s, steps);
    CHECK(std::abs(q.value - 0.5) <= q.bracket + 1e-12);
    CHECK(q.monotone);
  }

  const auto q = convex_one_sided_derivative(fbar1d(2), 0.5, Side::Right, steps);
  CHECK(q.value == 0.125);
  CHECK(q.bracket == 0.0);

  const auto concave = poly([](double t) { return -t * t; });
  CHECK_FALSE(convex_one_sided_derivative(concave, 0.5, Side::Right, steps).monotone);
}

TEST_CASE("brackets shrink with the step for convex inputs") {
  const auto f = poly([](double t) { return std::exp(2 * t) + std::abs(t - 0.3); });
  std::vector<double> steps;
  for (int e = 4; e <= 20; ++e) steps.push_back(std::ldexp(1.0, -e));
  const auto q = convex_one_sided_derivative(f, 0.6, Side::Right, steps);
  CHECK(q.monotone);
  for (std::size_t i = 2; i < q.quotients.size(); ++i) {
    CHECK(q.quotients[i - 1] - q.quotients[i] <= q.quotients[i - 2] - q.quotients[i - 1] + 1e-9);
  }
}

TEST_CASE("directional restriction") {
  const ConvexFunctionExpr bowl(QuadraticBase::sum_of_squares(2));
  const std::vector<double> x{0.5, 0.5}, e1{1, 0}, e2{0, 1};
  const auto g = directional_restriction(bowl, x, e1);
  for (double t : {0.0, 0.25, -0.25}) CHECK(g.eval(t) == doctest::Approx((0.5 + t) * (0.5 + t) + 0.25));
  CHECK(g.lo == -0.5);
  CHECK(g.hi == 0.5);

  const ConvexFunctionExpr fb(QuadraticBase::zero(2), {Term::fbar(2, 0)});
  const std::vector<double> y{0.3, 0.6};
  const auto h = directional_restriction(fb, y, e2);
  REQUIRE(h.exact);
  CHECK(h.exact(Dyadic(1, -3)) == h.exact(Dyadic(-1, -2)));
  CHECK(h.eval(0.2) == h.eval(-0.3));

  const std::vector<double> z{0.6, 0.8};
  const auto r = directional_restriction(fb, y, z);
  const auto steps = default_derivative_steps();
  for (int i = 1; i <= 5; ++i) {
    const double t = r.lo + (r.hi - r.lo) * i / 6.0;
    CHECK(convex_one_sided_derivative(r, t, Side::Right, steps).monotone);
    CHECK(convex_one_sided_derivative(r, t, Side::Left, steps).monotone);
  }

  const std::vector<double> edge{0.0, 0.5};
  CHECK_THROWS_AS(directional_restriction(bowl, edge, e1), std::invalid_argument);
  const std::vector<double> longer{1, 1};
  CHECK_THROWS_AS(directional_restriction(bowl, x, longer), std::invalid_argument);
}

TEST_CASE("cone systems") {
  const auto cs = build_cone_system(2, 8);
  CHECK(cs.points.size() == 8);
  CHECK(cs.cap_radius == doctest::Approx(2 * std::sin(std::numbers::pi / 8) / 1000));
  CHECK(cs.cap_radius == doctest::Approx(7.65e-4).epsilon(1e-3));
  CHECK(cs.hull_radius == doctest::Approx(0.924).epsilon(1e-3));
  CHECK(cs.perturbed_hull_radius >= 0.25);
  CHECK_FALSE(cs.zero_margin);

  const auto tri = build_cone_system(2, 3);
  CHECK(tri.hull_radius == doctest::Approx(0.5));
  CHECK(tri.zero_margin);
  CHECK_THROWS_AS(build_cone_system(2, 2), std::invalid_argument);

  const auto ico = build_cone_system(3, 12);
  CHECK(ico.points.size() == 12);
  CHECK(ico.hull_radius > 0.5);
  CHECK(build_cone_system(3, 13).points.size() == 42);
  // every cap point pair is far apart relative to the cap radius
  for (std::size_t i = 0; i < ico.points.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double d = 0;
      for (int a = 0; a < 3; ++a) d += (ico.points[i][a] - ico.points[j][a]) * (ico.points[i][a] - ico.points[j][a]);
      CHECK(std::sqrt(d) >= 1000 * ico.cap_radius - 1e-12);
    }
  }
}

TEST_CASE("cone probe") {
  const auto cs = build_cone_system(2, 8);
  const std::vector<double> x{0.4, 0.55};

  const ConvexFunctionExpr bowl(QuadraticBase::sum_of_squares(2));
  const auto smooth = cone_probe(bowl, x, cs, 3);
  CHECK_FALSE(smooth.inconclusive);
  for (double d : smooth.cap_deviation) CHECK(d == 0.0);
  CHECK(smooth.selected == 0);

  const ConvexFunctionExpr flat(QuadraticBase(2, std::vector<Dyadic>(4), {Dyadic(1), Dyadic(2)}, Dyadic(0)));
  CHECK(cone_probe(flat, x, cs, 3).inconclusive);

  const ConvexFunctionExpr kinked(QuadraticBase::sum_of_squares(2, Dyadic::from_double(0.01)), {Term::fbar(2, 0)});
  const std::vector<double> at_break{5.0 / 16 - std::ldexp(1.0, -16), 0.45};
  const auto r = cone_probe(kinked, at_break, cs, 3);
  CHECK_FALSE(r.inconclusive);
  CHECK((r.selected == 0 || r.selected == 4));
  // caps around +-e_2 are never chosen
  CHECK(r.selected != 2);
  CHECK(r.selected != 6);
}

TEST_CASE("derivative stability radius") {
  const auto part = derivative_stability_radius([](double x) { return 2 * x; }, 0.1);
  const double h = std::ldexp(1.0, -14);
  CHECK(std::abs(part.rho - 3.125e-4) <= 0.025 * h * 1.0001);
  CHECK(part.nodes.front() == 0.0);
  CHECK(part.nodes.back() == 1.0);
  CHECK(part.nodes[1] < 0.1);

  const auto affine = derivative_stability_radius([](double) { return 3.0; }, 0.1);
  CHECK(affine.rho == doctest::Approx(0.025 * (1 - h)));
  CHECK(affine.nodes.size() == 3);

  // x^4 against a brute-force oscillation scan of the returned partition
  const auto d4 = [](double x) { return 4 * x * x * x; };
  const auto q = derivative_stability_radius(d4, 0.2);
  for (std::size_t l = 1; l < q.nodes.size(); ++l) {
    double lo = INFINITY, hi = -INFINITY;
    for (double x = q.nodes[l - 1]; x <= q.nodes[l] + 1e-15; x += h) lo = std::min(lo, d4(x)), hi = std::max(hi, d4(x));
    CHECK(hi - lo < 0.05);
  }
  double min_gap = INFINITY;
  for (std::size_t l = 2; l < q.nodes.size(); ++l) min_gap = std::min(min_gap, q.nodes[l] - q.nodes[l - 1]);
  CHECK(q.rho == doctest::Approx(0.05 * min_gap));
  CHECK(q.nodes[1] < 0.2);
  // the last cell sits where 4x^3 is steepest: its width is about 0.05/12
  CHECK(q.nodes.back() - q.nodes[q.nodes.size() - 2] == doctest::Approx(0.05 / 12).epsilon(0.01));

  CHECK_THROWS_AS(derivative_stability_radius([](double x) { return 1e6 * x; }, 0.1), std::runtime_error);
}

TEST_CASE("derivative stability checks") {
  const auto f = poly([](double x) { return x * x; });
  const auto df = [](double x) { return 2 * x; };
  const double eps = 0.1;
  const double rho = derivative_stability_radius(df, eps).rho;

  const auto g = poly([rho](double x) { return x * x + rho / 2 * std::abs(x - 0.3); });
  const auto ok = check_derivative_stability(f, df, g, eps, rho);
  CHECK(ok.pass);
  CHECK(ok.probes == 100);
  CHECK(check_derivative_stability(f, df, f, eps, rho).pass);

  const auto bad = poly([rho](double x) { return x * x + 10 * rho * std::abs(x - 0.3); });
  const auto control = check_derivative_stability(f, df, bad, eps, rho);
  CHECK_FALSE(control.pass);
  CHECK(control.precondition_witness.has_value());

  // with an affine f the radius is close to eps/4, and 10 rho bends the
  // derivative of g by more than eps at the kink
  const auto lin = poly([](double x) { return x; });
  const auto one = [](double) { return 1.0; };
  const double rho_lin = derivative_stability_radius(one, eps).rho;
  const auto kinked = poly([rho_lin](double x) { return x + 10 * rho_lin * std::abs(x - 0.3); });
  const auto rep = check_derivative_stability(lin, one, kinked, eps, rho_lin);
  CHECK_FALSE(rep.pass);
  REQUIRE(rep.derivative_witness.has_value());
}

TEST_CASE("exponent shift under differentiation") {
  const double c = 0.5;
  auto r = exponent_shift_check(cusp(c, 1.5), cusp_derivative(c, 1.5), c);
  CHECK(r.status == ShiftStatus::Pass);
  CHECK(std::abs(r.h_f - 1.5) < 0.1);
  CHECK(std::abs(r.h_derivative - 0.5) < 0.1);

  r = exponent_shift_check(cusp(c, 1.2), cusp_derivative(c, 1.2), c);
  CHECK(r.status == ShiftStatus::Pass);
  CHECK(r.deviation <= 0.15);

  r = exponent_shift_check(poly([](double t) { return t * t; }), poly([](double t) { return 2 * t; }), 0.5);
  CHECK(r.status == ShiftStatus::Inconclusive);
}

TEST_CASE("one-sided derivative exponents stay below h_f - 1") {
  const double c = 0.5;
  const auto f = poly([c](double t) { return std::abs(t - c) + std::pow(std::abs(t - c), 1.5); });
  const auto steps = default_derivative_steps();
  const auto right = poly([&](double t) { return convex_one_sided_derivative(f, t, Side::Right, steps).value; });
  const auto left = poly([&](double t) { return convex_one_sided_derivative(f, t, Side::Left, steps).value; });
  const double hf = holder_estimate_1d(f, c).value;
  const double hd = std::min(holder_estimate_1d(right, c).value, holder_estimate_1d(left, c).value);
  CHECK(hd <= hf - 1 + 0.15);
}
