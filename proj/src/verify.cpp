#include "cvxspec/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cvxspec/expr.hpp"
#include "cvxspec/regularity.hpp"

namespace cvxspec {

namespace {

Function1D on_unit(std::function<double(double)> fn) { return {std::move(fn), 0.0, 1.0, {}}; }

Function1D cusp(double c, double h) {
  return on_unit([c, h](double t) { return std::pow(std::abs(t - c), h); });
}

Function1D cusp_derivative(double c, double h) {
  return on_unit([c, h](double t) {
    const double s = t < c ? -1.0 : (t > c ? 1.0 : 0.0);
    return h * s * std::pow(std::abs(t - c), h - 1.0);
  });
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

void convexity(std::vector<CheckRow>& rows, const VerifyOptions& opts) {
  const ConvexFunctionExpr stairs(QuadraticBase::zero(1), {Term::fbar(2)});
  const auto composite = compose_generic(QuadraticBase::sum_of_squares(1), ScaleSequence({3, 6}));
  const auto a = convexity_check(stairs, 0, 16);
  const auto b = convexity_check(composite, 0, 14);
  rows.push_back({"convexity", false, a.ok && b.ok,
                  "exact second differences: " + std::to_string(a.violations + b.violations) + " violations over " +
                      std::to_string(a.points_checked + b.points_checked) + " points"});
  if (opts.negative_controls) {
    const ConvexFunctionExpr concave(QuadraticBase::unchecked(1, {Dyadic(-1)}, {Dyadic(0)}, Dyadic(0)), {});
    ConvexityOptions fl;
    fl.exact = false;
    const auto r = convexity_check(concave, 0, 10, fl);
    rows.push_back({"convexity", true, r.ok, std::to_string(r.violations) + " violations on -x^2"});
  }
}

void exponent_shift(std::vector<CheckRow>& rows, const VerifyOptions& opts) {
  bool ok = true;
  double worst = 0.0;
  for (double h : {1.1, 1.3, 1.5, 1.7, 1.9}) {
    const auto r = exponent_shift_check(cusp(0.5, h), cusp_derivative(0.5, h), 0.5);
    ok = ok && r.status == ShiftStatus::Pass;
    worst = std::max(worst, r.deviation);
  }
  rows.push_back({"exponent-shift", false, ok, "cusps |t-1/2|^h, max |h_f - h_f' - 1| = " + fmt(worst)});
  if (opts.negative_controls) {
    // derivative of the h = 1.9 cusp paired with the h = 1.5 cusp
    const auto r = exponent_shift_check(cusp(0.5, 1.5), cusp_derivative(0.5, 1.9), 0.5);
    rows.push_back({"exponent-shift", true, r.status == ShiftStatus::Pass,
                    std::string("mismatched derivative: ") + shift_status_name(r.status) + ", deviation " +
                        fmt(r.deviation)});
  }
}

void derivative_stability(std::vector<CheckRow>& rows, const VerifyOptions& opts) {
  const auto f = on_unit([](double x) { return x * x; });
  const auto df = [](double x) { return 2.0 * x; };
  const double eps = 0.1;
  const double rho = derivative_stability_radius(df, eps).rho;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool ok = true;
  std::size_t probes = 0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double c = unit(rng), a = 0.9 * rho * unit(rng);
    std::function<double(double)> bump;
    switch (i % 3) {
      case 0: bump = [c](double x) { return std::abs(x - c); }; break;
      case 1: bump = [c](double x) { return std::max(0.0, x - c); }; break;
      default: bump = [c](double x) { return (x - c) * (x - c); }; break;
    }
    const auto g = on_unit([bump, a](double x) { return x * x + a * bump(x); });
    const auto r = check_derivative_stability(f, df, g, eps, rho);
    ok = ok && r.pass;
    probes += r.probes;
    worst = std::max(worst, r.worst_derivative_gap);
  }
  rows.push_back({"derivative-stability", false, ok,
                  "x^2, eps 0.1, rho " + fmt(rho) + ": 20 perturbations, " + std::to_string(probes) +
                      " probes, worst gap " + fmt(worst)});
  if (opts.negative_controls) {
    const auto g = on_unit([rho](double x) { return x * x + 10.0 * rho * std::abs(x - 0.3); });
    const auto r = check_derivative_stability(f, df, g, eps, rho);
    std::string where = r.precondition_witness ? "sup-norm witness at " + fmt(*r.precondition_witness)
                        : r.derivative_witness ? "derivative witness at " + fmt(*r.derivative_witness)
                                               : "no witness";
    rows.push_back({"derivative-stability", true, r.pass, "10 rho kink at 0.3: " + where});
  }
}

void cone_probe_check(std::vector<CheckRow>& rows, const VerifyOptions& opts) {
  const auto cs = build_cone_system(2, 8);
  const ConvexFunctionExpr f(QuadraticBase::sum_of_squares(2, Dyadic::from_double(0.01)), {Term::fbar(2, 0)});
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> mid(0.2, 0.8);
  int hits = 0;
  for (int j = 0; j < 10; ++j) {
    const std::vector<double> x{(j + 1) / 16.0 - std::ldexp(1.0, -16), mid(rng)};
    const auto r = cone_probe(f, x, cs, 3);
    if (!r.inconclusive && (r.selected == 0 || r.selected == 4)) ++hits;
  }
  rows.push_back({"cone-probe", false, hits == 10, std::to_string(hits) + "/10 breakpoints select a cap at +-e_1"});
}

void boundary_spike(std::vector<CheckRow>& rows, const VerifyOptions& opts) {
  HolderOptions ho;
  ho.scale_exponents = scale_range(3, 10);
  auto run = [&](const ConvexFunctionExpr& f, double& boundary_max, double& interior_min) {
    const FunctionND fn = [&f](std::span<const double> x) { return f.eval(x); };
    boundary_max = 0.0;
    interior_min = 1e9;
    for (int i = 0; i < 10; ++i) {
      const double x2 = (i + 0.5) / 10.0;
      const std::vector<double> b{0.0, x2}, in{0.5, x2};
      boundary_max = std::max(boundary_max, holder_estimate_nd(fn, 2, b, ho).value);
      interior_min = std::min(interior_min, holder_estimate_nd(fn, 2, in, ho).value);
    }
  };
  double bmax, imin;
  run(ConvexFunctionExpr(QuadraticBase::sum_of_squares(2), {Term::phi(5, 0)}), bmax, imin);
  rows.push_back({"boundary-spike", false, bmax <= 0.3 && imin >= 1.0,
                  "quadratic + phi_5: boundary max " + fmt(bmax) + ", interior min " + fmt(imin)});
  if (opts.negative_controls) {
    run(ConvexFunctionExpr(QuadraticBase::sum_of_squares(2), {}), bmax, imin);
    rows.push_back({"boundary-spike", true, bmax <= 0.3 && imin >= 1.0,
                    "quadratic without spike: boundary max " + fmt(bmax)});
  }
}

using CheckFn = void (*)(std::vector<CheckRow>&, const VerifyOptions&);

struct Entry {
  const char* name;
  CheckFn run;
};

constexpr Entry kChecks[] = {
    {"convexity", convexity},
    {"exponent-shift", exponent_shift},
    {"derivative-stability", derivative_stability},
    {"cone-probe", cone_probe_check},
    {"boundary-spike", boundary_spike},
};

}  // namespace

const std::vector<std::string>& verify_check_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : kChecks) v.emplace_back(e.name);
    return v;
  }();
  return names;
}

std::vector<CheckRow> run_verify_suite(const VerifyOptions& opts) {
  const auto& names = verify_check_names();
  for (const auto& n : opts.only)
    if (std::find(names.begin(), names.end(), n) == names.end())
      throw std::invalid_argument("unknown check: " + n);
  std::vector<CheckRow> rows;
  for (const auto& e : kChecks) {
    if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), e.name) == opts.only.end()) continue;
    e.run(rows, opts);
  }
  return rows;
}

std::string verify_table(const std::vector<CheckRow>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  for (const auto& r : rows) {
    out << r.name << std::string(width - r.name.size() + 2, ' ') << (r.control ? "control " : "check   ")
        << (r.passed ? "pass" : "fail") << (r.as_expected() ? "  ok   " : "  BAD  ") << r.detail << '\n';
  }
  return out.str();
}

std::string verify_csv(const std::vector<CheckRow>& rows) {
  std::ostringstream out;
  out << "name,control,passed,as_expected,detail\n";
  for (const auto& r : rows) {
    std::string detail = r.detail;
    std::replace(detail.begin(), detail.end(), '"', '\'');
    out << r.name << ',' << (r.control ? 1 : 0) << ',' << (r.passed ? 1 : 0) << ',' << (r.as_expected() ? 1 : 0)
        << ",\"" << detail << "\"\n";
  }
  return out.str();
}

nlohmann::json verify_json(const std::vector<CheckRow>& rows) {
  nlohmann::json j;
  j["format"] = "cvxspec-verify/1";
  j["checks"] = nlohmann::json::array();
  bool all = true;
  for (const auto& r : rows) {
    all = all && r.as_expected();
    j["checks"].push_back(
        {{"name", r.name}, {"control", r.control}, {"passed", r.passed}, {"as_expected", r.as_expected()}, {"detail", r.detail}});
  }
  j["all_as_expected"] = all;
  return j;
}

}  // namespace cvxspec
