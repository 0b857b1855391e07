#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "cvxspec/dyadic.hpp"
#include "cvxspec/sequence.hpp"

namespace cvxspec {

/// Materialization limit for interval sets.
constexpr std::size_t kMaxMaterializedIntervals = std::size_t{1} << 24;

struct Interval {
  Dyadic lo;
  Dyadic hi;
};

/// Sorted, disjoint closed intervals of one generation.
struct IntervalSet {
  std::size_t generation = 0;
  std::vector<Interval> intervals;

  nlohmann::json to_json() const;
  static IntervalSet from_json(const nlohmann::json& j);
};

/// Raised when an intersection runs empty; generation() names where.
class EmptyIntersection : public std::runtime_error {
 public:
  EmptyIntersection(std::size_t generation, const std::string& what)
      : std::runtime_error(what), generation_(generation) {}
  std::size_t generation() const { return generation_; }

 private:
  std::size_t generation_;
};

/// Parameters of the generation-k intervals: 2^(l_k^2) cells of width
/// 2^-cell_exp, each holding [(j+1)c - w, (j+1)c - w/2] with w = 2^-width_exp.
struct Generation {
  std::size_t k = 0;
  std::int64_t level = 0;
  std::int64_t cell_exp = 0;
  std::int64_t width_exp = 0;

  Dyadic cell() const { return Dyadic::pow2(-cell_exp); }
  Dyadic width() const { return Dyadic::pow2(-width_exp); }
  /// Interval in cell j.
  Interval in_cell(const mpz_class& j) const;
};

/// Throws std::invalid_argument unless h lies in [1, 2).
void require_holder_level(double h);

Generation generation(double h, const ScaleSequence& seq, std::size_t k);

/// All 2^(l_k^2) intervals of generation k (1-based). Throws when the
/// intervals would not fit their cells or exceed the materialization cap.
IntervalSet level_intervals(double h, const ScaleSequence& seq, std::size_t k);

/// Exact intersection of generations k_start..K. Intervals overlapping in a
/// single point are dropped.
IntervalSet intersect_to_depth(double h, const ScaleSequence& seq, std::size_t K, std::size_t k_start = 1);

struct CoveringCount {
  std::size_t generation;
  mpz_class count;           // N_k
  std::int64_t log2_length;  // log2 delta_k, delta_k = w_k / 2
  double slope;              // log2 N_k / -log2 delta_k
};

/// Symbolic covering counts for generations k_start..K.
std::vector<CoveringCount> covering_counts(double h, const ScaleSequence& seq, std::size_t K, std::size_t k_start = 1);

std::string covering_counts_csv(const std::vector<CoveringCount>& counts);
nlohmann::json covering_counts_json(const std::vector<CoveringCount>& counts);

/// Uniform mass on the depth-K intersection: each surviving interval splits
/// its mass equally among its children. In d >= 2 the measure is the product
/// with Lebesgue measure on [0,1]^(d-1). Ball masses are computed exactly
/// without materializing the hierarchy.
class MassDistribution {
 public:
  MassDistribution(double h, const ScaleSequence& seq, std::size_t K, std::size_t k_start = 1, int dimension = 1);

  int dimension() const { return d_; }
  const std::vector<Generation>& generations() const { return gens_; }
  /// Children per surviving interval, per generation (first entry: count of
  /// top-level intervals).
  const std::vector<mpz_class>& branching() const { return branching_; }
  /// Mass of each depth-k interval (k indexes generations()).
  mpq_class interval_mass(std::size_t level_index) const;
  /// Finest resolved length delta_K.
  Dyadic resolution() const { return gens_.back().width().mul_pow2(-1); }
  /// Coarsest radius accepted by local_dimension.
  Dyadic coarsest_radius() const { return gens_.front().cell(); }

  /// mu([lo, hi]) of the 1D marginal, exact.
  mpq_class interval_measure(const Dyadic& lo, const Dyadic& hi) const;
  /// mu of the sup-norm ball B(x, r), exact.
  mpq_class ball_measure(std::span<const Dyadic> x, const Dyadic& r) const;

  /// Left endpoint of the depth-K interval reached by choosing child
  /// path[i] at generation i.
  Dyadic support_point(std::span<const mpz_class> path) const;

  /// Masses of the materialized depth-k intervals, for bookkeeping checks.
  std::vector<mpq_class> level_masses(std::size_t level_index) const;

 private:
  mpq_class measure_in(std::size_t level_index, const mpz_class& j_first, const mpz_class& j_last,
                       const Dyadic& lo, const Dyadic& hi) const;

  int d_;
  std::vector<Generation> gens_;
  std::vector<mpz_class> branching_;
};

/// Least-squares slope through the origin of log mu(B(x,r)) against log r.
/// Throws std::invalid_argument for radii outside [delta_K, coarsest cell].
double local_dimension(const MassDistribution& m, std::span<const Dyadic> x, std::span<const Dyadic> radii);

/// log2 of a positive rational, accurate for huge numerators and denominators.
double log2_rational(const mpq_class& q);

}  // namespace cvxspec
