#include "cvxspec/expr.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "cvxspec/kernels.hpp"
#include "cvxspec/parallel.hpp"
#include "cvxspec/staircase.hpp"

namespace cvxspec {

namespace {

void require_dimension(int d) {
  if (d < 1 || d > kMaxDimension) throw std::invalid_argument("dimension must be 1, 2 or 3");
}

void require_point(std::span<const double> x, int d) {
  if (static_cast<int>(x.size()) != d) throw std::invalid_argument("point has wrong dimension");
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("point outside [0,1]^d");
  }
}

Dyadic determinant(const std::vector<Dyadic>& a, const std::vector<int>& idx, int d) {
  auto at = [&](int r, int c) -> const Dyadic& { return a[idx[r] * d + idx[c]]; };
  switch (idx.size()) {
    case 1:
      return at(0, 0);
    case 2:
      return at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
    case 3:
      return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
             at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
             at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
    default:
      return Dyadic(1);
  }
}

}  // namespace

bool psd_certificate(int d, const std::vector<Dyadic>& quad) {
  require_dimension(d);
  if (static_cast<int>(quad.size()) != d * d) return false;
  // Semidefiniteness needs all principal minors, not only the leading ones.
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < d; ++i) {
      if (mask & (1u << i)) idx.push_back(i);
    }
    if (determinant(quad, idx, d).sign() < 0) return false;
  }
  return true;
}

// ---- QuadraticBase ----

void QuadraticBase::init(int d, std::vector<Dyadic> quad, std::vector<Dyadic> linear, Dyadic constant) {
  require_dimension(d);
  if (static_cast<int>(quad.size()) != d * d || static_cast<int>(linear.size()) != d) {
    throw std::invalid_argument("quadratic coefficients do not match the dimension");
  }
  d_ = d;
  quad_ = std::move(quad);
  linear_ = std::move(linear);
  constant_ = std::move(constant);
  quad_f_.clear();
  linear_f_.clear();
  for (const auto& q : quad_) quad_f_.push_back(q.to_double());
  for (const auto& b : linear_) linear_f_.push_back(b.to_double());
  constant_f_ = constant_.to_double();
}

QuadraticBase::QuadraticBase(int d, std::vector<Dyadic> quad, std::vector<Dyadic> linear, Dyadic constant) {
  init(d, std::move(quad), std::move(linear), std::move(constant));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      if (quad_[i * d + j] != quad_[j * d + i]) throw std::invalid_argument("quadratic form is not symmetric");
    }
  }
  if (!psd_certificate(d, quad_)) throw std::invalid_argument("quadratic form is not positive semidefinite");
}

QuadraticBase QuadraticBase::unchecked(int d, std::vector<Dyadic> quad, std::vector<Dyadic> linear,
                                       Dyadic constant) {
  QuadraticBase q;
  q.init(d, std::move(quad), std::move(linear), std::move(constant));
  return q;
}

QuadraticBase QuadraticBase::zero(int d) {
  require_dimension(d);
  return QuadraticBase(d, std::vector<Dyadic>(d * d), std::vector<Dyadic>(d), Dyadic());
}

QuadraticBase QuadraticBase::sum_of_squares(int d, const Dyadic& coeff) {
  require_dimension(d);
  std::vector<Dyadic> q(d * d);
  for (int i = 0; i < d; ++i) q[i * d + i] = coeff;
  return QuadraticBase(d, std::move(q), std::vector<Dyadic>(d), Dyadic());
}

bool QuadraticBase::is_zero() const {
  for (const auto& q : quad_) {
    if (!q.is_zero()) return false;
  }
  for (const auto& b : linear_) {
    if (!b.is_zero()) return false;
  }
  return constant_.is_zero();
}

double QuadraticBase::eval(std::span<const double> x) const {
  double v = constant_f_;
  for (int i = 0; i < d_; ++i) {
    double row = linear_f_[i];
    for (int j = 0; j < d_; ++j) row += quad_f_[i * d_ + j] * x[j];
    v += row * x[i];
  }
  return v;
}

Dyadic QuadraticBase::eval_exact(std::span<const Dyadic> x) const {
  Dyadic v = constant_;
  for (int i = 0; i < d_; ++i) {
    Dyadic row = linear_[i];
    for (int j = 0; j < d_; ++j) {
      if (!quad_[i * d_ + j].is_zero()) row += quad_[i * d_ + j] * x[j];
    }
    v += row * x[i];
  }
  return v;
}

double QuadraticBase::partial(int axis, std::span<const double> x) const {
  double v = linear_f_[axis];
  for (int j = 0; j < d_; ++j) v += 2.0 * quad_f_[axis * d_ + j] * x[j];
  return v;
}

// ---- terms ----

Term Term::fbar(std::int64_t level, int axis, Dyadic weight) {
  StaircaseParams check(level);
  (void)check;
  Term t;
  t.kind = TermKind::Fbar;
  t.level = level;
  t.axis = axis;
  t.weight = std::move(weight);
  return t;
}

Term Term::phi(std::int64_t level, int axis, Dyadic weight) {
  if (level < 2) throw std::invalid_argument("phi level must be >= 2");
  Term t;
  t.kind = TermKind::Phi;
  t.level = level;
  t.axis = axis;
  t.weight = std::move(weight);
  return t;
}

Term Term::mollified(std::shared_ptr<const ConvexFunctionExpr> child, double lambda, int nodes_exp, Dyadic weight) {
  if (!child) throw std::invalid_argument("mollified term needs a child expression");
  if (!(lambda > 0.0 && lambda < 0.5)) throw std::invalid_argument("mollification lambda must lie in (0, 1/2)");
  if (nodes_exp < 1 || nodes_exp > 10) throw std::invalid_argument("quadrature exponent must lie in [1, 10]");
  Term t;
  t.kind = TermKind::Mollified;
  t.child = std::move(child);
  t.lambda = lambda;
  t.nodes_exp = nodes_exp;
  t.weight = std::move(weight);
  return t;
}

std::shared_ptr<const BumpRule> bump_rule(int d, int m) {
  require_dimension(d);
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const BumpRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{d, m}];
  if (slot) return slot;

  auto rule = std::make_shared<BumpRule>();
  rule->dimension = d;
  rule->nodes_exp = m;
  const std::size_t per_axis = std::size_t{1} << m;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  std::vector<double> u(d);
  double mass = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const std::size_t i = rest % per_axis;
      rest /= per_axis;
      u[a] = -1.0 + (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(per_axis);
      r2 += u[a] * u[a];
    }
    if (r2 >= 1.0) continue;
    const double w = std::exp(-1.0 / (1.0 - r2));
    rule->offsets.insert(rule->offsets.end(), u.begin(), u.end());
    rule->weights.push_back(w);
    mass += w;
  }
  for (double& w : rule->weights) w /= mass;
  slot = rule;
  return slot;
}

namespace {

// Sample points T(x) - lambda*u for every bump node.
template <class Fn>
void for_each_mollifier_sample(const BumpRule& rule, double lambda, std::span<const double> x, Fn&& fn) {
  const int d = rule.dimension;
  double y[kMaxDimension];
  double tx[kMaxDimension];
  for (int a = 0; a < d; ++a) tx[a] = 0.5 + (1.0 - 2.0 * lambda) * (x[a] - 0.5);
  const std::size_t n = rule.weights.size();
  for (std::size_t k = 0; k < n; ++k) {
    for (int a = 0; a < d; ++a) {
      y[a] = std::clamp(tx[a] - lambda * rule.offsets[k * d + a], 0.0, 1.0);
    }
    fn(k, std::span<const double>(y, d));
  }
}

double mollify_with_rule(const ConvexFunctionExpr& f, const BumpRule& rule, double lambda, std::span<const double> x) {
  std::vector<double> values(rule.weights.size());
  for_each_mollifier_sample(rule, lambda, x, [&](std::size_t k, std::span<const double> y) {
    values[k] = f.eval(y);
    if (!std::isfinite(values[k])) throw std::runtime_error("non-finite sample in mollifier quadrature");
  });
  return kernels::dot(rule.weights, values);
}

double mollify_partial_with_rule(const ConvexFunctionExpr& f, const BumpRule& rule, double lambda, int axis,
                                 std::span<const double> x) {
  std::vector<double> values(rule.weights.size());
  for_each_mollifier_sample(rule, lambda, x,
                            [&](std::size_t k, std::span<const double> y) { values[k] = f.partial(axis, y); });
  return (1.0 - 2.0 * lambda) * kernels::dot(rule.weights, values);
}

}  // namespace

double mollify_eval(const ConvexFunctionExpr& f, double lambda, std::span<const double> x, int nodes_exp) {
  if (!(lambda > 0.0 && lambda < 0.5)) throw std::invalid_argument("mollification lambda must lie in (0, 1/2)");
  require_point(x, f.dimension());
  return mollify_with_rule(f, *bump_rule(f.dimension(), nodes_exp), lambda, x);
}

// ---- ConvexFunctionExpr ----

ConvexFunctionExpr::ConvexFunctionExpr(QuadraticBase base, std::vector<Term> terms)
    : base_(std::move(base)), terms_(std::move(terms)) {
  const int d = base_.dimension();
  for (const auto& t : terms_) {
    if (t.weight.sign() < 0) throw std::invalid_argument("term weights must be nonnegative");
    if (t.kind == TermKind::Mollified) {
      if (!t.child) throw std::invalid_argument("mollified term needs a child expression");
      if (t.child->dimension() != d) throw std::invalid_argument("mollified child has a different dimension");
      rules_.push_back(bump_rule(d, t.nodes_exp));
    } else {
      if (t.axis < 0 || t.axis >= d) throw std::invalid_argument("term axis out of range");
      rules_.push_back(nullptr);
    }
  }
}

bool ConvexFunctionExpr::exact_capable() const {
  for (const auto& t : terms_) {
    if (t.kind != TermKind::Fbar) return false;
  }
  return true;
}

double ConvexFunctionExpr::eval(std::span<const double> x) const {
  require_point(x, dimension());
  double v = base_.eval(x);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const Term& t = terms_[i];
    const double w = t.weight.to_double();
    switch (t.kind) {
      case TermKind::Fbar:
        v += w * fbar_eval_float(StaircaseParams(t.level), x[t.axis]);
        break;
      case TermKind::Phi:
        v += w * phi_eval(t.level, x[t.axis]);
        break;
      case TermKind::Mollified:
        v += w * mollify_with_rule(*t.child, *rules_[i], t.lambda, x);
        break;
    }
  }
  return v;
}

Dyadic ConvexFunctionExpr::eval_exact(std::span<const Dyadic> x) const {
  if (!exact_capable()) throw std::logic_error("expression has terms without exact evaluation");
  if (static_cast<int>(x.size()) != dimension()) throw std::invalid_argument("point has wrong dimension");
  Dyadic v = base_.eval_exact(x);
  for (const auto& t : terms_) v += t.weight * fbar_eval(StaircaseParams(t.level), x[t.axis]);
  return v;
}

double ConvexFunctionExpr::partial(int axis, std::span<const double> x) const {
  require_point(x, dimension());
  double v = base_.partial(axis, x);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const Term& t = terms_[i];
    const double w = t.weight.to_double();
    switch (t.kind) {
      case TermKind::Fbar:
        if (t.axis == axis) v += w * gamma_eval_float(StaircaseParams(t.level), x[axis]);
        break;
      case TermKind::Phi:
        if (t.axis == axis) v += w * phi_derivative(t.level, x[axis]);
        break;
      case TermKind::Mollified:
        v += w * mollify_partial_with_rule(*t.child, *rules_[i], t.lambda, axis, x);
        break;
    }
  }
  return v;
}

// ---- JSON ----

namespace {

nlohmann::json dyadic_array(const std::vector<Dyadic>& v) {
  auto out = nlohmann::json::array();
  for (const auto& x : v) out.push_back(x.to_string());
  return out;
}

std::vector<Dyadic> parse_dyadic_array(const nlohmann::json& j, std::size_t expected, const char* what) {
  if (!j.is_array() || j.size() != expected) {
    throw std::invalid_argument(std::string("expression field '") + what + "' has the wrong length");
  }
  std::vector<Dyadic> out;
  for (const auto& e : j) out.push_back(Dyadic::parse(e.get<std::string>()));
  return out;
}

const char* kind_name(TermKind k) {
  switch (k) {
    case TermKind::Fbar:
      return "fbar";
    case TermKind::Phi:
      return "phi";
    case TermKind::Mollified:
      return "mollified";
  }
  return "?";
}

}  // namespace

nlohmann::json ConvexFunctionExpr::to_json() const {
  nlohmann::json j;
  j["format"] = kExprFormat;
  j["dimension"] = dimension();
  j["base"] = {{"quadratic", dyadic_array(base_.quad())},
               {"linear", dyadic_array(base_.linear())},
               {"constant", base_.constant().to_string()}};
  auto terms = nlohmann::json::array();
  for (const auto& t : terms_) {
    nlohmann::json tj;
    tj["kind"] = kind_name(t.kind);
    tj["weight"] = t.weight.to_string();
    if (t.kind == TermKind::Mollified) {
      tj["lambda"] = Dyadic::from_double(t.lambda).to_string();
      tj["nodes_exp"] = t.nodes_exp;
      tj["child"] = t.child->to_json();
    } else {
      tj["level"] = t.level;
      tj["axis"] = t.axis;
    }
    terms.push_back(std::move(tj));
  }
  j["terms"] = std::move(terms);
  return j;
}

ConvexFunctionExpr ConvexFunctionExpr::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kExprFormat) {
      throw std::invalid_argument("unsupported expression format '" + j.at("format").get<std::string>() + "'");
    }
    const int d = j.at("dimension").get<int>();
    require_dimension(d);
    const auto& b = j.at("base");
    QuadraticBase base(d, parse_dyadic_array(b.at("quadratic"), d * d, "quadratic"),
                       parse_dyadic_array(b.at("linear"), d, "linear"),
                       Dyadic::parse(b.at("constant").get<std::string>()));
    std::vector<Term> terms;
    for (const auto& tj : j.at("terms")) {
      const auto kind = tj.at("kind").get<std::string>();
      const Dyadic weight = Dyadic::parse(tj.at("weight").get<std::string>());
      if (kind == "fbar") {
        terms.push_back(Term::fbar(tj.at("level").get<std::int64_t>(), tj.at("axis").get<int>(), weight));
      } else if (kind == "phi") {
        terms.push_back(Term::phi(tj.at("level").get<std::int64_t>(), tj.at("axis").get<int>(), weight));
      } else if (kind == "mollified") {
        auto child = std::make_shared<const ConvexFunctionExpr>(from_json(tj.at("child")));
        const double lambda = Dyadic::parse(tj.at("lambda").get<std::string>()).to_double();
        terms.push_back(Term::mollified(std::move(child), lambda, tj.at("nodes_exp").get<int>(), weight));
      } else {
        throw std::invalid_argument("unknown term kind '" + kind + "'");
      }
    }
    return ConvexFunctionExpr(std::move(base), std::move(terms));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed expression document: ") + e.what());
  }
}

ConvexFunctionExpr compose_generic(const QuadraticBase& base, const ScaleSequence& seq) {
  std::vector<Term> terms;
  for (auto l : seq.entries()) terms.push_back(Term::fbar(l, 0));
  return ConvexFunctionExpr(base, std::move(terms));
}

// ---- convexity ----

ConvexityReport convexity_check(const ConvexFunctionExpr& f, int axis, int n, const ConvexityOptions& opts) {
  const int d = f.dimension();
  if (axis < 0 || axis >= d) throw std::invalid_argument("axis out of range");
  if (n < 1 || n > 26) throw std::invalid_argument("grid exponent must lie in [1, 26]");
  std::vector<double> anchor = opts.anchor.empty() ? std::vector<double>(d, 0.5) : opts.anchor;
  if (static_cast<int>(anchor.size()) != d) throw std::invalid_argument("anchor has wrong dimension");

  const std::size_t count = (std::size_t{1} << n) + 1;
  ConvexityReport report;
  report.points_checked = count - 2;

  if (opts.exact) {
    report.exact = true;
    if (!f.exact_capable()) throw std::logic_error("exact convexity check needs an exact-capable expression");
    std::vector<Dyadic> values(count);
    parallel_for(count, [&](std::size_t begin, std::size_t end) {
      std::vector<Dyadic> x;
      for (double a : anchor) x.push_back(Dyadic::from_double(a));
      for (std::size_t i = begin; i < end; ++i) {
        x[axis] = Dyadic(static_cast<long>(i), -n);
        values[i] = f.eval_exact(x);
      }
    });
    std::optional<Dyadic> min_diff;
    for (std::size_t i = 1; i + 1 < count; ++i) {
      const Dyadic diff = values[i - 1] + values[i + 1] - values[i].mul_pow2(1);
      if (!diff.is_zero()) report.all_zero = false;
      if (!min_diff || diff < *min_diff) min_diff = diff;
      if (diff.sign() < 0) {
        ++report.violations;
        if (!report.witness) report.witness = std::ldexp(static_cast<double>(i), -n);
      }
    }
    if (min_diff) report.min_second_difference = min_diff->to_float().value;
  } else {
    std::vector<double> values(count);
    double scale = 0.0;
    parallel_for(count, [&](std::size_t begin, std::size_t end) {
      std::vector<double> x = anchor;
      for (std::size_t i = begin; i < end; ++i) {
        x[axis] = std::ldexp(static_cast<double>(i), -n);
        values[i] = f.eval(x);
      }
    });
    for (double v : values) scale = std::max(scale, std::abs(v));
    const double tol = opts.tolerance * (1.0 + scale);
    report.min_second_difference = kernels::second_difference_min(values).value;
    for (std::size_t i = 1; i + 1 < count; ++i) {
      const double diff = (values[i - 1] + values[i + 1]) - values[i] * 2.0;
      if (diff != 0.0) report.all_zero = false;
      if (diff < -tol) {
        ++report.violations;
        if (!report.witness) report.witness = std::ldexp(static_cast<double>(i), -n);
      }
    }
  }
  report.ok = report.violations == 0;
  return report;
}

}  // namespace cvxspec
