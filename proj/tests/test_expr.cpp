#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "cvxspec/expr.hpp"
#include "cvxspec/staircase.hpp"

using namespace cvxspec;

namespace {
ConvexityOptions float_mode() {
  ConvexityOptions o;
  o.exact = false;
  return o;
}
}  // namespace

TEST_CASE("principal-minor certificate") {
  CHECK(psd_certificate(2, {Dyadic(1), Dyadic(0), Dyadic(0), Dyadic(1)}));
  CHECK(psd_certificate(2, {Dyadic(1), Dyadic(1), Dyadic(1), Dyadic(1)}));  // singular
  CHECK_FALSE(psd_certificate(2, {Dyadic(1), Dyadic(2), Dyadic(2), Dyadic(1)}));
  // leading minors 0, 0 but a negative diagonal entry further down
  CHECK_FALSE(psd_certificate(2, {Dyadic(0), Dyadic(0), Dyadic(0), Dyadic(-1)}));
  CHECK_FALSE(psd_certificate(3, {Dyadic(0), Dyadic(0), Dyadic(0), Dyadic(0), Dyadic(0), Dyadic(1), Dyadic(0),
                                  Dyadic(1), Dyadic(0)}));
  CHECK_THROWS_AS(QuadraticBase(1, {Dyadic(-1)}, {Dyadic(0)}, Dyadic(0)), std::invalid_argument);
  CHECK_THROWS_AS(QuadraticBase(2, {Dyadic(1), Dyadic(1), Dyadic(0), Dyadic(1)}, {Dyadic(0), Dyadic(0)}, Dyadic(0)),
                  std::invalid_argument);
}

TEST_CASE("compose_generic builds one fbar term per entry") {
  const auto seq = ScaleSequence::smallest(3);
  const auto f = compose_generic(QuadraticBase::zero(1), seq);
  REQUIRE(f.terms().size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(f.terms()[i].kind == TermKind::Fbar);
    CHECK(f.terms()[i].level == seq[i]);
  }
  CHECK(f.exact_capable());

  const auto g = compose_generic(QuadraticBase::sum_of_squares(2), ScaleSequence{});
  CHECK(g.terms().empty());
  const std::vector<double> x{0.25, 0.5};
  CHECK(g.eval(x) == 0.25 * 0.25 + 0.25);
  CHECK_THROWS_AS(ScaleSequence({3, 4}), SequenceError);
}

TEST_CASE("exact and float evaluation agree") {
  const auto f = compose_generic(QuadraticBase::sum_of_squares(2, Dyadic(1, -2)), ScaleSequence({3, 6}));
  for (double a : {0.0, 0.1, 0.5, 0.77, 1.0}) {
    const std::vector<double> x{a, 0.3};
    const std::vector<Dyadic> xe{Dyadic::from_double(a), Dyadic::from_double(0.3)};
    CHECK(f.eval(x) == doctest::Approx(f.eval_exact(xe).to_double()).epsilon(1e-14));
  }
}

TEST_CASE("json round trip is bit-exact") {
  auto child = std::make_shared<const ConvexFunctionExpr>(
      ConvexFunctionExpr(QuadraticBase::zero(2), {Term::fbar(2, 0)}));
  QuadraticBase base(2, {Dyadic::from_double(0.01), Dyadic(1, -4), Dyadic(1, -4), Dyadic(1)},
                     {Dyadic(-3, -5), Dyadic(0)}, Dyadic(7, -1));
  const ConvexFunctionExpr f(base, {Term::fbar(3, 1, Dyadic(3, -2)), Term::phi(5, 0),
                                    Term::mollified(child, 0.1, 3)});
  const auto j = f.to_json();
  CHECK(j["format"] == "cvxspec-expr/1");
  const auto g = ConvexFunctionExpr::from_json(j);
  CHECK(g.to_json() == j);
  CHECK(j.dump() == ConvexFunctionExpr::from_json(nlohmann::json::parse(j.dump())).to_json().dump());
  const std::vector<double> x{0.3, 0.6};
  CHECK(f.eval(x) == g.eval(x));
  CHECK(g.terms()[2].lambda == 0.1);

  auto broken = j;
  broken["format"] = "other/1";
  CHECK_THROWS_AS(ConvexFunctionExpr::from_json(broken), std::invalid_argument);
  broken = j;
  broken["terms"][0]["kind"] = "spline";
  CHECK_THROWS_AS(ConvexFunctionExpr::from_json(broken), std::invalid_argument);
  broken = j;
  broken["base"]["quadratic"][0] = "-1";
  CHECK_THROWS_AS(ConvexFunctionExpr::from_json(broken), std::invalid_argument);
  broken = j;
  broken.erase("dimension");
  CHECK_THROWS_AS(ConvexFunctionExpr::from_json(broken), std::invalid_argument);
}

TEST_CASE("mollification") {
  const auto rule = bump_rule(2, 5);
  double total = 0;
  for (double w : rule->weights) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

  // constants are preserved
  const ConvexFunctionExpr c(QuadraticBase(1, {Dyadic(0)}, {Dyadic(0)}, Dyadic(3, -1)));
  CHECK(mollify_eval(c, 0.2, std::vector<double>{0.4}) == doctest::Approx(1.5).epsilon(1e-14));

  // affine functions commute with the symmetric kernel: value is f(T(x))
  const ConvexFunctionExpr lin(QuadraticBase(1, {Dyadic(0)}, {Dyadic(1)}, Dyadic(0)));
  for (double x : {0.0, 0.3, 0.5, 0.9, 1.0}) {
    const double tx = 0.5 + (1 - 2 * 0.1) * (x - 0.5);
    CHECK(mollify_eval(lin, 0.1, std::vector<double>{x}) == doctest::Approx(tx).epsilon(1e-13));
  }

  CHECK_THROWS_AS(mollify_eval(lin, 0.5, std::vector<double>{0.2}), std::invalid_argument);
  CHECK_THROWS_AS(mollify_eval(lin, 0.0, std::vector<double>{0.2}), std::invalid_argument);
}

TEST_CASE("mollified fbar_2 stays close to fbar_2") {
  // brute-force sup-distance on the 2^-10 grid
  auto f = std::make_shared<const ConvexFunctionExpr>(ConvexFunctionExpr(QuadraticBase::zero(1), {Term::fbar(2)}));
  const double lambda = std::ldexp(1.0, -8);
  double sup = 0;
  for (int i = 0; i <= 1024; ++i) {
    const std::vector<double> x{i / 1024.0};
    sup = std::max(sup, std::abs(mollify_eval(*f, lambda, x) - f->eval(x)));
  }
  CHECK(sup < std::ldexp(1.0, -6));
}

TEST_CASE("mollified output has non-decreasing difference quotients") {
  auto f = std::make_shared<const ConvexFunctionExpr>(ConvexFunctionExpr(QuadraticBase::zero(1), {Term::fbar(2)}));
  const ConvexFunctionExpr g(QuadraticBase::zero(1), {Term::mollified(f, 0.05, 6)});
  const auto report = convexity_check(g, 0, 9, float_mode());
  CHECK(report.ok);
}

TEST_CASE("partial derivatives") {
  const ConvexFunctionExpr f(QuadraticBase::sum_of_squares(2), {Term::fbar(2, 0), Term::phi(3, 1)});
  const std::vector<double> x{0.5, 0.01};
  CHECK(f.partial(0, x) == doctest::Approx(1.0 + 0.125));
  CHECK(f.partial(1, x) == doctest::Approx(0.02 - 9.0));
}

TEST_CASE("convexity check") {
  const ConvexFunctionExpr f(QuadraticBase::zero(1), {Term::fbar(2)});
  const auto r = convexity_check(f, 0, 18);
  CHECK(r.ok);
  CHECK(r.exact);
  CHECK(r.violations == 0);
  CHECK(r.points_checked == (1u << 18) - 1);

  const ConvexFunctionExpr f2(QuadraticBase::zero(2), {Term::fbar(2, 0)});
  const auto flat = convexity_check(f2, 1, 6);
  CHECK(flat.ok);
  CHECK(flat.all_zero);

  const ConvexFunctionExpr concave(QuadraticBase::unchecked(1, {Dyadic(-1)}, {Dyadic(0)}, Dyadic(0)));
  auto bad = convexity_check(concave, 0, 6);
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.witness);
  CHECK(*bad.witness == 1.0 / 64);
  bad = convexity_check(concave, 0, 6, float_mode());
  CHECK_FALSE(bad.ok);

  const ConvexFunctionExpr spiky(QuadraticBase::zero(1), {Term::phi(3)});
  CHECK_THROWS_AS(convexity_check(spiky, 0, 6), std::logic_error);
  CHECK(convexity_check(spiky, 0, 10, float_mode()).ok);
}

TEST_CASE("composite outputs are exactly convex") {
  const auto f = compose_generic(QuadraticBase::sum_of_squares(1), ScaleSequence({3, 6}));
  const auto r = convexity_check(f, 0, 12);
  CHECK(r.ok);
  CHECK(r.exact);
}
