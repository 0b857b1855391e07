#include "cvxspec/cantor.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace cvxspec {

namespace {

mpq_class to_rational(const Dyadic& d) {
  mpz_class scale = 1;
  if (d.exponent() >= 0) {
    scale <<= d.exponent();
    return mpq_class(d.mantissa() * scale);
  }
  scale <<= -d.exponent();
  mpq_class q(d.mantissa(), scale);
  q.canonicalize();
  return q;
}

mpz_class pow2z(std::int64_t e) {
  mpz_class z = 1;
  z <<= e;
  return z;
}

// ceil(x * 2^k)
mpz_class ceil_mul_pow2(const Dyadic& x, std::int64_t k) { return -(-x).floor_mul_pow2(k); }

const Dyadic& max_of(const Dyadic& a, const Dyadic& b) { return a < b ? b : a; }
const Dyadic& min_of(const Dyadic& a, const Dyadic& b) { return a < b ? a : b; }

void require_generation_range(const ScaleSequence& seq, std::size_t K, std::size_t k_start) {
  if (k_start < 1) throw std::invalid_argument("generations are numbered from 1");
  if (K > seq.depth()) throw std::invalid_argument("depth exceeds the sequence length");
  if (K < k_start) throw std::invalid_argument("depth is below the starting generation");
}

}  // namespace

double log2_rational(const mpq_class& q) {
  if (sgn(q) <= 0) throw std::domain_error("log2 of a non-positive value");
  auto lg = [](const mpz_class& z) {
    long e = 0;
    const double m = mpz_get_d_2exp(&e, z.get_mpz_t());
    return std::log2(m) + static_cast<double>(e);
  };
  return lg(q.get_num()) - lg(q.get_den());
}

void require_holder_level(double h) {
  if (!(h >= 1.0 && h < 2.0)) throw std::invalid_argument("h must lie in [1,2)");
}

Interval Generation::in_cell(const mpz_class& j) const {
  const Dyadic right(mpz_class(j + 1), -cell_exp);
  return {right - width(), right - width().mul_pow2(-1)};
}

Generation generation(double h, const ScaleSequence& seq, std::size_t k) {
  require_holder_level(h);
  if (k < 1 || k > seq.depth()) throw std::invalid_argument("generation out of range");
  Generation g;
  g.k = k;
  g.level = seq[k - 1];
  g.cell_exp = g.level * g.level;
  g.width_exp = width_exponent(g.level, k, h);
  if (g.width_exp <= g.cell_exp) {
    throw std::invalid_argument("generation " + std::to_string(k) + " intervals (width 2^-" +
                                std::to_string(g.width_exp) + ") do not fit cells of width 2^-" +
                                std::to_string(g.cell_exp));
  }
  return g;
}

IntervalSet level_intervals(double h, const ScaleSequence& seq, std::size_t k) {
  const Generation g = generation(h, seq, k);
  if (g.cell_exp > 24) {
    throw std::length_error("generation " + std::to_string(k) + " has 2^" + std::to_string(g.cell_exp) +
                            " intervals, above the materialization cap of 2^24");
  }
  IntervalSet out;
  out.generation = k;
  const long cells = 1L << g.cell_exp;
  out.intervals.reserve(cells);
  for (long j = 0; j < cells; ++j) out.intervals.push_back(g.in_cell(j));
  return out;
}

IntervalSet intersect_to_depth(double h, const ScaleSequence& seq, std::size_t K, std::size_t k_start) {
  require_generation_range(seq, K, k_start);
  IntervalSet current = level_intervals(h, seq, k_start);
  for (std::size_t k = k_start + 1; k <= K; ++k) {
    const Generation g = generation(h, seq, k);
    mpz_class candidates = 0;
    for (const auto& p : current.intervals) {
      candidates += p.hi.floor_mul_pow2(g.cell_exp) - p.lo.floor_mul_pow2(g.cell_exp) + 1;
    }
    if (candidates > kMaxMaterializedIntervals) {
      throw std::length_error("generation " + std::to_string(k) + " needs " + candidates.get_str() +
                              " candidate intervals, above the materialization cap of 2^24");
    }
    IntervalSet next;
    next.generation = k;
    for (const auto& p : current.intervals) {
      const mpz_class first = p.lo.floor_mul_pow2(g.cell_exp);
      const mpz_class last = p.hi.floor_mul_pow2(g.cell_exp);
      for (mpz_class j = first; j <= last; ++j) {
        const Interval c = g.in_cell(j);
        const Dyadic& lo = max_of(c.lo, p.lo);
        const Dyadic& hi = min_of(c.hi, p.hi);
        if (lo < hi) next.intervals.push_back({lo, hi});
      }
    }
    if (next.intervals.empty()) {
      throw EmptyIntersection(k, "intersection is empty at generation " + std::to_string(k));
    }
    current = std::move(next);
  }
  return current;
}

std::vector<CoveringCount> covering_counts(double h, const ScaleSequence& seq, std::size_t K, std::size_t k_start) {
  require_holder_level(h);
  std::vector<CoveringCount> out;
  if (K == 0) return out;
  require_generation_range(seq, K, k_start);
  mpz_class n = 0;
  std::int64_t prev_width = 0;
  for (std::size_t k = k_start; k <= K; ++k) {
    const Generation g = generation(h, seq, k);
    if (k == k_start) {
      n = pow2z(g.cell_exp);
    } else {
      // Each parent of length w_{k-1}/2 holds floor(parent / cell) whole cells.
      const std::int64_t e = g.cell_exp - prev_width - 1;
      if (e < 0) {
        throw EmptyIntersection(k, "generation " + std::to_string(k) + " cells (2^-" + std::to_string(g.cell_exp) +
                                       ") are wider than the surviving intervals; intersection is empty");
      }
      n *= pow2z(e);
    }
    prev_width = g.width_exp;
    const std::int64_t log2_len = -g.width_exp - 1;
    out.push_back({k, n, log2_len, log2_rational(mpq_class(n)) / static_cast<double>(-log2_len)});
  }
  return out;
}

std::string covering_counts_csv(const std::vector<CoveringCount>& counts) {
  std::ostringstream os;
  os << "generation,N_k,log2_delta_k,slope\n";
  for (const auto& c : counts) {
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, c.slope).ptr;
    os << c.generation << ',' << c.count.get_str() << ',' << c.log2_length << ',' << std::string_view(buf, end - buf)
       << '\n';
  }
  return os.str();
}

nlohmann::json covering_counts_json(const std::vector<CoveringCount>& counts) {
  auto rows = nlohmann::json::array();
  for (const auto& c : counts) {
    rows.push_back({{"generation", c.generation},
                    {"N_k", c.count.get_str()},
                    {"log2_delta_k", c.log2_length},
                    {"slope", c.slope}});
  }
  return rows;
}

nlohmann::json IntervalSet::to_json() const {
  auto list = nlohmann::json::array();
  for (const auto& iv : intervals) list.push_back({iv.lo.to_string(), iv.hi.to_string()});
  return {{"generation", generation}, {"intervals", std::move(list)}};
}

IntervalSet IntervalSet::from_json(const nlohmann::json& j) {
  try {
    IntervalSet out;
    out.generation = j.at("generation").get<std::size_t>();
    for (const auto& pair : j.at("intervals")) {
      if (!pair.is_array() || pair.size() != 2) throw std::invalid_argument("interval must be a [lo, hi] pair");
      out.intervals.push_back({Dyadic::parse(pair[0].get<std::string>()), Dyadic::parse(pair[1].get<std::string>())});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed interval set: ") + e.what());
  }
}

// ---- measure ----

MassDistribution::MassDistribution(double h, const ScaleSequence& seq, std::size_t K, std::size_t k_start,
                                   int dimension)
    : d_(dimension) {
  if (dimension < 1 || dimension > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (K == 0) throw std::invalid_argument("measure needs at least one generation");
  require_generation_range(seq, K, k_start);
  for (std::size_t k = k_start; k <= K; ++k) {
    const Generation g = generation(h, seq, k);
    if (gens_.empty()) {
      branching_.push_back(pow2z(g.cell_exp));
    } else {
      const std::int64_t e = g.cell_exp - gens_.back().width_exp - 1;
      if (e < 0) throw EmptyIntersection(k, "measure support is empty at generation " + std::to_string(k));
      branching_.push_back(pow2z(e));
    }
    gens_.push_back(g);
  }
}

mpq_class MassDistribution::interval_mass(std::size_t i) const {
  mpz_class total = 1;
  for (std::size_t a = 0; a <= i; ++a) total *= branching_.at(a);
  return mpq_class(mpz_class(1), total);
}

std::vector<mpq_class> MassDistribution::level_masses(std::size_t i) const {
  mpz_class total = 1;
  for (std::size_t a = 0; a <= i; ++a) total *= branching_.at(a);
  if (total > kMaxMaterializedIntervals) throw std::length_error("level too large to materialize");
  return std::vector<mpq_class>(total.get_ui(), interval_mass(i));
}

mpq_class MassDistribution::measure_in(std::size_t i, const mpz_class& j_first, const mpz_class& j_last,
                                       const Dyadic& lo, const Dyadic& hi) const {
  const Generation& g = gens_[i];
  const Dyadic w = g.width();
  const Dyadic half = w.mul_pow2(-1);
  const mpq_class mass = interval_mass(i);

  // Whole intervals inside [lo, hi].
  mpz_class full_first = ceil_mul_pow2(lo + w, g.cell_exp) - 1;
  mpz_class full_last = (hi + half).floor_mul_pow2(g.cell_exp) - 1;
  if (full_first < j_first) full_first = j_first;
  if (full_last > j_last) full_last = j_last;
  mpq_class total = 0;
  if (full_last >= full_first) total += mass * mpq_class(full_last - full_first + 1);

  // At most two intervals straddle an end of [lo, hi].
  mpz_class candidates[2] = {lo.floor_mul_pow2(g.cell_exp), hi.floor_mul_pow2(g.cell_exp)};
  for (int c = 0; c < 2; ++c) {
    const mpz_class& j = candidates[c];
    if (c == 1 && j == candidates[0]) break;
    if (j < j_first || j > j_last) continue;
    if (j >= full_first && j <= full_last) continue;
    const Interval iv = g.in_cell(j);
    const Dyadic& a = max_of(iv.lo, lo);
    const Dyadic& b = min_of(iv.hi, hi);
    if (!(a < b)) continue;
    if (i + 1 == gens_.size()) {
      total += mass * to_rational(b - a) / to_rational(half);
    } else {
      const Generation& child = gens_[i + 1];
      const mpz_class first = iv.lo.floor_mul_pow2(child.cell_exp);
      const mpz_class last = first + branching_[i + 1] - 1;
      total += measure_in(i + 1, first, last, a, b);
    }
  }
  return total;
}

mpq_class MassDistribution::interval_measure(const Dyadic& lo, const Dyadic& hi) const {
  if (!(lo < hi)) return 0;
  return measure_in(0, 0, branching_[0] - 1, lo, hi);
}

mpq_class MassDistribution::ball_measure(std::span<const Dyadic> x, const Dyadic& r) const {
  if (static_cast<int>(x.size()) != d_) throw std::invalid_argument("point has wrong dimension");
  mpq_class m = interval_measure(x[0] - r, x[0] + r);
  for (int a = 1; a < d_; ++a) {
    const Dyadic lo = max_of(x[a] - r, Dyadic(0));
    const Dyadic hi = min_of(x[a] + r, Dyadic(1));
    if (!(lo < hi)) return 0;
    m *= to_rational(hi - lo);
  }
  return m;
}

Dyadic MassDistribution::support_point(std::span<const mpz_class> path) const {
  if (path.size() != gens_.size()) throw std::invalid_argument("path must choose one child per generation");
  Interval iv;
  for (std::size_t i = 0; i < gens_.size(); ++i) {
    if (sgn(path[i]) < 0 || path[i] >= branching_[i]) throw std::invalid_argument("child index out of range");
    const mpz_class first = i == 0 ? mpz_class(0) : iv.lo.floor_mul_pow2(gens_[i].cell_exp);
    iv = gens_[i].in_cell(first + path[i]);
  }
  return iv.lo;
}

double local_dimension(const MassDistribution& m, std::span<const Dyadic> x, std::span<const Dyadic> radii) {
  if (radii.empty()) throw std::invalid_argument("need at least one radius");
  const Dyadic finest = m.resolution();
  const Dyadic coarsest = m.coarsest_radius();
  double sxy = 0, sxx = 0;
  for (const auto& r : radii) {
    if (r < finest) {
      throw std::invalid_argument("radius " + r.to_string() + " is below the resolution delta_K = " +
                                  finest.to_string());
    }
    if (r > coarsest) throw std::invalid_argument("radius " + r.to_string() + " exceeds the coarsest cell");
    const mpq_class mu = m.ball_measure(x, r);
    if (sgn(mu) <= 0) throw std::invalid_argument("point is not in the support of the measure");
    const double lr = log2_rational(to_rational(r));
    sxy += log2_rational(mu) * lr;
    sxx += lr * lr;
  }
  return sxy / sxx;
}

}  // namespace cvxspec
