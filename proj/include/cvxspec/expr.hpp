#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvxspec/dyadic.hpp"
#include "cvxspec/sequence.hpp"

namespace cvxspec {

constexpr int kMaxDimension = 3;

/// x^T A x + b^T x + c with dyadic coefficients. A is stored row-major and
/// symmetric.
class QuadraticBase {
 public:
  QuadraticBase() = default;
  /// Throws std::invalid_argument unless A is symmetric and positive
  /// semidefinite; the check is an exact principal-minor certificate.
  QuadraticBase(int dimension, std::vector<Dyadic> quad, std::vector<Dyadic> linear, Dyadic constant);

  static QuadraticBase zero(int dimension);
  /// Skips the convexity certificate. Only for negative controls.
  static QuadraticBase unchecked(int dimension, std::vector<Dyadic> quad, std::vector<Dyadic> linear,
                                 Dyadic constant);
  /// coeff * (x_1^2 + ... + x_d^2).
  static QuadraticBase sum_of_squares(int dimension, const Dyadic& coeff = Dyadic(1));

  int dimension() const { return d_; }
  const std::vector<Dyadic>& quad() const { return quad_; }
  const std::vector<Dyadic>& linear() const { return linear_; }
  const Dyadic& constant() const { return constant_; }
  bool is_zero() const;

  double eval(std::span<const double> x) const;
  Dyadic eval_exact(std::span<const Dyadic> x) const;
  double partial(int axis, std::span<const double> x) const;

 private:
  void init(int dimension, std::vector<Dyadic> quad, std::vector<Dyadic> linear, Dyadic constant);

  int d_ = 1;
  std::vector<Dyadic> quad_{Dyadic(0)};
  std::vector<Dyadic> linear_{Dyadic(0)};
  Dyadic constant_;
  // Float copies for the hot path.
  std::vector<double> quad_f_{0.0}, linear_f_{0.0};
  double constant_f_ = 0.0;
};

/// True when every principal minor of the symmetric d x d matrix is >= 0.
bool psd_certificate(int dimension, const std::vector<Dyadic>& quad);

class ConvexFunctionExpr;

enum class TermKind { Fbar, Phi, Mollified };

/// One convex summand, scaled by a nonnegative dyadic weight.
struct Term {
  TermKind kind = TermKind::Fbar;
  Dyadic weight{1};
  std::int64_t level = 2;  // fbar, phi
  int axis = 0;            // fbar, phi (0-based)
  // mollified
  std::shared_ptr<const ConvexFunctionExpr> child;
  double lambda = 0.0;
  int nodes_exp = 7;  // 2^nodes_exp midpoint nodes per axis

  static Term fbar(std::int64_t level, int axis = 0, Dyadic weight = Dyadic(1));
  static Term phi(std::int64_t level, int axis = 0, Dyadic weight = Dyadic(1));
  static Term mollified(std::shared_ptr<const ConvexFunctionExpr> child, double lambda, int nodes_exp = 7,
                        Dyadic weight = Dyadic(1));
};

/// Quadrature rule for the normalized bump exp(-1/(1-|u|^2)) on the unit ball:
/// midpoint nodes of [-1,1]^d inside the ball, weights summing to 1.
struct BumpRule {
  int dimension;
  int nodes_exp;
  std::vector<double> offsets;  // node-major, dimension doubles per node
  std::vector<double> weights;
};
std::shared_ptr<const BumpRule> bump_rule(int dimension, int nodes_exp);

/// Sum of a quadratic base and convex perturbation terms on [0,1]^d.
class ConvexFunctionExpr {
 public:
  ConvexFunctionExpr() = default;
  explicit ConvexFunctionExpr(QuadraticBase base, std::vector<Term> terms = {});

  int dimension() const { return base_.dimension(); }
  const QuadraticBase& base() const { return base_; }
  const std::vector<Term>& terms() const { return terms_; }

  /// Exact evaluation is possible when every term is an fbar term.
  bool exact_capable() const;

  double eval(std::span<const double> x) const;
  /// Throws std::logic_error when !exact_capable().
  Dyadic eval_exact(std::span<const Dyadic> x) const;
  /// Right partial derivative along axis (left derivative at x_axis = 1).
  double partial(int axis, std::span<const double> x) const;

  nlohmann::json to_json() const;
  static ConvexFunctionExpr from_json(const nlohmann::json& j);

 private:
  QuadraticBase base_;
  std::vector<Term> terms_;
  std::vector<std::shared_ptr<const BumpRule>> rules_;  // per term, mollified only
};

inline constexpr const char* kExprFormat = "cvxspec-expr/1";

/// Value of the mollified, domain-rescaled child at x. The child is sampled at
/// T(x) - lambda*u for bump nodes u, with T(x) = c + (1 - 2 lambda)(x - c) and
/// c the cube centre, so every sample stays in [0,1]^d. Throws
/// std::runtime_error on a non-finite sample.
double mollify_eval(const ConvexFunctionExpr& f, double lambda, std::span<const double> x, int nodes_exp = 7);

/// base + sum_k fbar_{l_k} along x_1.
ConvexFunctionExpr compose_generic(const QuadraticBase& base, const ScaleSequence& seq);

struct ConvexityOptions {
  /// Use exact arithmetic; requires an exact-capable expression.
  bool exact = true;
  /// Coordinates off the probed axis; defaults to 1/2 each.
  std::vector<double> anchor;
  /// Float mode: second differences below -tolerance * (1 + max|f|) count as violations.
  double tolerance = 64 * 2.220446049250313e-16;
};

struct ConvexityReport {
  bool ok = true;
  bool exact = false;
  std::size_t points_checked = 0;  // interior grid points
  std::size_t violations = 0;
  bool all_zero = true;              // every second difference is exactly 0
  double min_second_difference = 0;  // as a double, also in exact mode
  std::optional<double> witness;     // axis coordinate of the first violation
};

/// Second differences f(x - d e_j) - 2 f(x) + f(x + d e_j) >= 0 at the interior
/// points of the 2^-n grid along axis j (0-based).
ConvexityReport convexity_check(const ConvexFunctionExpr& f, int axis, int n, const ConvexityOptions& opts = {});

}  // namespace cvxspec
